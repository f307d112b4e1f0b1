#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tasio::rt {

enum class TraceEvent : std::uint8_t { spawn, ready, start, pause, resume, body_end, complete, poll };

std::string_view to_string(TraceEvent e) noexcept;
std::optional<TraceEvent> parse_trace_event(std::string_view s) noexcept;

struct TraceRecord {
  std::int64_t time_ns = 0;
  TraceEvent event = TraceEvent::spawn;
  std::uint64_t id = 0;  // task id, or service id for `poll`

  bool operator==(const TraceRecord&) const = default;
};

/// Line format: `<time_ns> <event> <task_or_service_id>`.
std::string format_trace_line(const TraceRecord& r);
void write_trace(std::ostream& os, const std::vector<TraceRecord>& records);
std::vector<TraceRecord> parse_trace(std::istream& is);

}  // namespace tasio::rt
