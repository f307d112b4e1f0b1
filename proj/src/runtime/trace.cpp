#include "tasio/runtime/trace.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>

#include "tasio/common/error.hpp"

namespace tasio::rt {

namespace {
constexpr std::array<std::string_view, 8> kNames = {"spawn",    "ready",    "start", "pause",
                                                    "resume",   "body_end", "complete", "poll"};
}

std::string_view to_string(TraceEvent e) noexcept { return kNames[static_cast<std::size_t>(e)]; }

std::optional<TraceEvent> parse_trace_event(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == s) return static_cast<TraceEvent>(i);
  }
  return std::nullopt;
}

std::string format_trace_line(const TraceRecord& r) {
  std::string line = std::to_string(r.time_ns);
  line += ' ';
  line += to_string(r.event);
  line += ' ';
  line += std::to_string(r.id);
  return line;
}

void write_trace(std::ostream& os, const std::vector<TraceRecord>& records) {
  for (const auto& r : records) os << format_trace_line(r) << '\n';
}

std::vector<TraceRecord> parse_trace(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    TraceRecord r;
    std::string name;
    if (!(ls >> r.time_ns >> name >> r.id)) {
      throw Error(Errc::parse_error, "trace line " + std::to_string(lineno));
    }
    auto ev = parse_trace_event(name);
    if (!ev) throw Error(Errc::parse_error, "unknown trace event '" + name + "'");
    r.event = *ev;
    out.push_back(r);
  }
  return out;
}

}  // namespace tasio::rt
