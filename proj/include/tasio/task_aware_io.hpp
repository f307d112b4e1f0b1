#pragma once

#include <sys/types.h>
#include <sys/uio.h>

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "tasio/io/io_context.hpp"
#include "tasio/runtime/runtime.hpp"

namespace tasio {

struct TasioConfig {
  std::size_t max_in_flight = 1000;
  Nanos retry_sleep = std::chrono::milliseconds(1);
  io::Backend backend = io::Backend::simulated;
  std::optional<io::DeviceModel> model;
  unsigned pool_workers = 4;
  bool strict_extend = false;
  /// Completions reaped per polling round at most.
  std::size_t poll_batch = 64;
  /// Apply TASIO_MAX_INFLIGHT / TASIO_RETRY_US from the environment.
  bool read_env = true;

  void validate() const;
};

/// Where a non-blocking call stores its outcome: bytes transferred or a
/// negated errno. Written before the owner's event counter drops.
struct IoResult {
  std::int64_t result = 0;
  bool done = false;
};

struct OpRecord {
  std::uint64_t op = 0;
  rt::TaskId task{0};
  bool blocking = false;
  io::IoKind kind = io::IoKind::read;
  std::uint64_t length = 0;
  Nanos issued{0};    // first submission attempt
  Nanos accepted{0};  // submission that got a slot
  Nanos completed{0};
  unsigned retries = 0;
  std::int64_t result = 0;
};

struct TasioStats {
  std::size_t submitted = 0;
  std::size_t completed = 0;
  std::size_t retried_ops = 0;
  std::size_t resumes = 0;
  std::size_t decrements = 0;
  std::size_t max_outstanding = 0;
  std::size_t cap_violations = 0;
  std::size_t reentrant_polls = 0;
  std::size_t late_submissions = 0;  // issued while shutting down
};

/// Task-aware storage I/O on top of a `Runtime`.
///
/// Construction creates the I/O context and registers the polling function
/// with the runtime; only one instance may be attached to a runtime at a time.
///
/// The blocking wrappers mirror the POSIX calls (same return values and
/// errno) but pause the calling task while the request is in flight. The
/// `ta_*` calls return at once and hold the calling task's completion back
/// with its event counter until the request finishes.
class TaskAwareIo {
 public:
  TaskAwareIo(rt::Runtime& runtime, TasioConfig config);
  ~TaskAwareIo();

  TaskAwareIo(const TaskAwareIo&) = delete;
  TaskAwareIo& operator=(const TaskAwareIo&) = delete;

  /// Drains every outstanding operation, then detaches from the runtime.
  void shutdown();

  ssize_t pread(const io::FileHandle& file, void* buf, std::size_t count, off_t offset);
  ssize_t pwrite(const io::FileHandle& file, const void* buf, std::size_t count, off_t offset);
  ssize_t preadv(const io::FileHandle& file, const iovec* iov, int iovcnt, off_t offset);
  ssize_t pwritev(const io::FileHandle& file, const iovec* iov, int iovcnt, off_t offset);

  void ta_pread(const io::FileHandle& file, void* buf, std::size_t count, off_t offset,
                IoResult* slot = nullptr);
  void ta_pwrite(const io::FileHandle& file, const void* buf, std::size_t count, off_t offset,
                 IoResult* slot = nullptr);
  void ta_preadv(const io::FileHandle& file, const iovec* iov, int iovcnt, off_t offset,
                 IoResult* slot = nullptr);
  void ta_pwritev(const io::FileHandle& file, const iovec* iov, int iovcnt, off_t offset,
                  IoResult* slot = nullptr);

  /// errno values of the failed non-blocking calls issued by `task`.
  std::vector<int> last_errors(rt::TaskId task) const;

  /// The polling function: reaps a batch of completions, wakes their owners
  /// and retries deferred submissions. Returns the completions processed.
  std::size_t poll();

  /// Operations issued and not yet finished (including deferred retries).
  std::size_t pending_ops() const;
  TasioStats stats() const;
  std::vector<OpRecord> op_log() const;

  io::IoContext& context() noexcept { return *ctx_; }
  const TasioConfig& config() const noexcept { return config_; }
  bool active() const noexcept { return service_.has_value(); }

 private:
  struct Pending {
    std::size_t log_index = 0;
    bool blocking = false;
    rt::TaskId task{0};
    std::int64_t* blocking_result = nullptr;
    IoResult* slot = nullptr;
    std::optional<rt::ResumeHandle> handle;
    bool finished = false;
  };
  struct Deferred {
    io::IoRequest request;
    Pending op;
    Nanos retry_at{0};
  };

  ssize_t blocking_call(io::IoRequest request);
  void nonblocking_call(io::IoRequest request, IoResult* slot);
  std::size_t open_log_locked(const io::IoRequest& request, bool blocking, rt::TaskId task);
  void note_submit_locked();
  void finish_nonblocking_locked(Pending& op, std::int64_t result, Nanos at);
  std::size_t handle_records(const std::vector<io::CompletionRecord>& records);
  void retry_deferred();

  rt::Runtime& rt_;
  TasioConfig config_;
  std::unique_ptr<io::IoContext> ctx_;
  std::optional<rt::ServiceId> service_;

  mutable std::mutex mu_;
  std::condition_variable drained_cv_;
  std::unordered_map<std::uint64_t, Pending> pending_;  // by request id
  std::deque<Deferred> deferred_;
  std::unordered_map<std::uint64_t, std::vector<int>> errors_;  // by task id
  std::vector<OpRecord> log_;
  TasioStats stats_;
  bool shutting_down_ = false;
  std::atomic<bool> in_poll_{false};
};

}  // namespace tasio
