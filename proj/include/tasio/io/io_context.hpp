#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "tasio/common/clock.hpp"
#include "tasio/io/device_model.hpp"
#include "tasio/io/request.hpp"

namespace tasio::io {

enum class Backend : std::uint8_t { simulated, pool };

std::string_view to_string(Backend b) noexcept;
Backend parse_backend(std::string_view text);

struct IoContextOptions {
  std::size_t capacity = 1000;
  Backend backend = Backend::simulated;
  std::optional<DeviceModel> model;  // required by the simulated backend
  unsigned pool_workers = 4;
  /// Pool backend: writes that would grow the file run synchronously.
  bool strict_extend = false;
};

namespace detail {
class BackendImpl;
}

/// Queue of asynchronous positional requests against one backend.
///
/// At most `capacity` requests are outstanding (submitted and not yet reaped);
/// a submission beyond that returns `QueueFull`. Reaped records free their
/// slot. All members are safe to call concurrently.
///
/// Blocking members (`wait_completions`, `wait_request`) wait through the
/// context's clock, so under a runtime's virtual clock they occupy only the
/// calling task's agent.
class IoContext {
 public:
  IoContext(IoContextOptions options, Clock& clock);
  ~IoContext();

  IoContext(const IoContext&) = delete;
  IoContext& operator=(const IoContext&) = delete;

  SubmitResult submit(const IoRequest& request);
  std::vector<CompletionRecord> poll_completions(std::size_t max);
  WaitResult wait_completions(std::size_t min, Nanos timeout);
  /// Blocks until `id` finishes and reaps only that record.
  CompletionRecord wait_request(RequestId id);

  std::size_t outstanding() const;
  std::size_t capacity() const noexcept { return options_.capacity; }
  Backend backend() const noexcept { return options_.backend; }
  const IoContextOptions& options() const noexcept { return options_; }
  Clock& clock() noexcept { return clock_; }

 private:
  IoContextOptions options_;
  Clock& clock_;
  std::unique_ptr<detail::BackendImpl> impl_;
};

}  // namespace tasio::io

namespace tasio::io {

/// Runs `request` synchronously with positional read/write calls on a real
/// file. Returns bytes transferred or a negated errno.
std::int64_t perform_now(const IoRequest& request);

}  // namespace tasio::io
