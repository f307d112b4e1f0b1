#pragma once

#include <sys/types.h>

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "tasio/common/clock.hpp"

namespace tasio::io {

enum class IoKind : std::uint8_t { read, write };

std::string_view to_string(IoKind k) noexcept;

/// Alignment unit for direct (page-cache bypassing) requests.
inline constexpr std::uint64_t kDirectAlignment = 512;

enum class RequestId : std::uint64_t {};
constexpr std::uint64_t raw(RequestId id) noexcept { return static_cast<std::uint64_t>(id); }

/// Non-owning reference to an open file. Simulated files carry only a size.
struct FileHandle {
  int fd = -1;
  std::uint64_t size = 0;
  bool simulated = false;
  bool direct = false;

  bool valid() const noexcept { return simulated || fd >= 0; }
};

struct Segment {
  std::byte* data = nullptr;
  std::size_t length = 0;
};

/// One positional storage operation: a single segment for pread/pwrite,
/// several for preadv/pwritev.
struct IoRequest {
  IoKind kind = IoKind::read;
  FileHandle file;
  std::uint64_t offset = 0;
  std::vector<Segment> segments;
  bool direct = false;

  std::uint64_t total_length() const noexcept;
  /// Throws `Errc::misaligned` or `Errc::bad_file` when the request cannot be
  /// submitted.
  void validate() const;
};

/// Outcome of one request: bytes transferred (>= 0) or a negated errno.
struct CompletionRecord {
  RequestId id{0};
  std::int64_t result = 0;
  Nanos completion_time{0};

  bool ok() const noexcept { return result >= 0; }
};

struct Completed {
  std::int64_t result = 0;
};
struct InFlight {
  RequestId id{0};
};
struct QueueFull {};

using SubmitResult = std::variant<Completed, InFlight, QueueFull>;

struct WaitResult {
  std::vector<CompletionRecord> records;
  bool timed_out = false;
};

}  // namespace tasio::io
