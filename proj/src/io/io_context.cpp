#include "tasio/io/io_context.hpp"

#include <sys/stat.h>
#include <sys/uio.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "tasio/common/error.hpp"
#include "tasio/io/simulated_device.hpp"

namespace tasio::io {

std::string_view to_string(IoKind k) noexcept { return k == IoKind::read ? "read" : "write"; }

std::string_view to_string(Backend b) noexcept { return b == Backend::simulated ? "sim" : "pool"; }

Backend parse_backend(std::string_view text) {
  if (text == "sim" || text == "simulated") return Backend::simulated;
  if (text == "pool") return Backend::pool;
  throw Error(Errc::parse_error, "unknown backend '" + std::string(text) + "'");
}

std::uint64_t IoRequest::total_length() const noexcept {
  std::uint64_t n = 0;
  for (const Segment& s : segments) n += s.length;
  return n;
}

void IoRequest::validate() const {
  if (!file.valid()) throw Error(Errc::bad_file, "request on an invalid file handle");
  if (direct) {
    if (offset % kDirectAlignment != 0) {
      throw Error(Errc::misaligned, "direct request offset " + std::to_string(offset) +
                                        " is not a multiple of " + std::to_string(kDirectAlignment));
    }
    for (const Segment& s : segments) {
      if (s.length % kDirectAlignment != 0 ||
          reinterpret_cast<std::uintptr_t>(s.data) % kDirectAlignment != 0) {
        throw Error(Errc::misaligned, "direct request segment is not aligned");
      }
    }
  }
  if (!file.simulated) {
    for (const Segment& s : segments) {
      if (s.data == nullptr && s.length > 0) {
        throw Error(Errc::bad_argument, "null buffer for a real file");
      }
    }
  }
}

std::int64_t perform_now(const IoRequest& req) {
  if (req.file.simulated) return -EBADF;
  ssize_t rc = 0;
  if (req.segments.size() == 1) {
    const Segment& s = req.segments.front();
    rc = req.kind == IoKind::read
             ? ::pread(req.file.fd, s.data, s.length, static_cast<off_t>(req.offset))
             : ::pwrite(req.file.fd, s.data, s.length, static_cast<off_t>(req.offset));
  } else {
    std::vector<iovec> iov(req.segments.size());
    for (std::size_t i = 0; i < iov.size(); ++i) {
      iov[i] = {req.segments[i].data, req.segments[i].length};
    }
    const int cnt = static_cast<int>(iov.size());
    rc = req.kind == IoKind::read
             ? ::preadv(req.file.fd, iov.data(), cnt, static_cast<off_t>(req.offset))
             : ::pwritev(req.file.fd, iov.data(), cnt, static_cast<off_t>(req.offset));
  }
  return rc >= 0 ? static_cast<std::int64_t>(rc) : -static_cast<std::int64_t>(errno);
}

namespace detail {

class BackendImpl {
 public:
  BackendImpl(std::size_t capacity, Clock& clock) : capacity_(capacity), clock_(clock) {}
  virtual ~BackendImpl() = default;

  virtual SubmitResult submit(const IoRequest& req) = 0;
  virtual std::vector<CompletionRecord> poll(std::size_t max) = 0;
  virtual WaitResult wait(std::size_t min, Nanos timeout) = 0;
  virtual CompletionRecord wait_for(RequestId id) = 0;

  std::size_t outstanding() const {
    std::lock_guard lk(mu_);
    return outstanding_;
  }

 protected:
  std::vector<CompletionRecord> take_locked(std::size_t max) {
    const std::size_t n = std::min(max, done_.size());
    std::vector<CompletionRecord> out(done_.begin(), done_.begin() + static_cast<std::ptrdiff_t>(n));
    done_.erase(done_.begin(), done_.begin() + static_cast<std::ptrdiff_t>(n));
    outstanding_ -= n;
    return out;
  }

  std::optional<CompletionRecord> take_id_locked(RequestId id) {
    auto it = std::find_if(done_.begin(), done_.end(),
                           [id](const CompletionRecord& r) { return r.id == id; });
    if (it == done_.end()) return std::nullopt;
    CompletionRecord rec = *it;
    done_.erase(it);
    --outstanding_;
    return rec;
  }

  const std::size_t capacity_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::size_t outstanding_ = 0;
  std::uint64_t next_id_ = 0;
  std::deque<CompletionRecord> done_;
};

namespace {

class SimBackend final : public BackendImpl {
 public:
  SimBackend(std::size_t capacity, Clock& clock, DeviceModel model)
      : BackendImpl(capacity, clock), device_(std::move(model)) {}

  SubmitResult submit(const IoRequest& req) override {
    const std::uint64_t total = req.total_length();
    if (total == 0) return Completed{0};
    std::optional<Nanos> wake;
    RequestId id{0};
    {
      std::lock_guard lk(mu_);
      if (outstanding_ >= capacity_) return QueueFull{};
      const Nanos now = clock_.now();
      collect_locked(now);
      std::uint64_t bytes = total;
      if (req.kind == IoKind::read) {
        bytes = req.offset >= req.file.size ? 0 : std::min(total, req.file.size - req.offset);
      }
      id = RequestId{++next_id_};
      device_.submit(id, req.kind, bytes, static_cast<std::int64_t>(bytes), now);
      ++outstanding_;
      wake = device_.next_event();
    }
    if (wake) clock_.notify_at(*wake);
    return InFlight{id};
  }

  std::vector<CompletionRecord> poll(std::size_t max) override {
    std::vector<CompletionRecord> out;
    std::optional<Nanos> wake;
    {
      std::lock_guard lk(mu_);
      collect_locked(clock_.now());
      out = take_locked(max);
      wake = device_.next_event();
    }
    if (wake) clock_.notify_at(*wake);
    return out;
  }

  WaitResult wait(std::size_t min, Nanos timeout) override {
    const Nanos deadline = clock_.now() + timeout;
    for (;;) {
      std::optional<Nanos> next;
      {
        std::lock_guard lk(mu_);
        collect_locked(clock_.now());
        if (done_.size() >= min) return {take_locked(done_.size()), false};
        next = device_.next_event();
      }
      if (!next || *next > deadline) {
        clock_.sleep_until(deadline);
        std::lock_guard lk(mu_);
        collect_locked(clock_.now());
        const bool enough = done_.size() >= min;
        return {take_locked(done_.size()), !enough};
      }
      clock_.sleep_until(*next);
    }
  }

  CompletionRecord wait_for(RequestId id) override {
    for (;;) {
      std::optional<Nanos> eta;
      {
        std::lock_guard lk(mu_);
        collect_locked(clock_.now());
        if (auto rec = take_id_locked(id)) return *rec;
        eta = device_.estimate_completion(id);
      }
      if (!eta) throw Error(Errc::bad_argument, "unknown request id");
      clock_.sleep_until(*eta);
    }
  }

 private:
  void collect_locked(Nanos now) {
    scratch_.clear();
    device_.advance(now, scratch_);
    done_.insert(done_.end(), scratch_.begin(), scratch_.end());
  }

  SimulatedDevice device_;
  std::vector<CompletionRecord> scratch_;
};

class PoolBackend final : public BackendImpl {
 public:
  PoolBackend(std::size_t capacity, Clock& clock, unsigned workers, bool strict_extend)
      : BackendImpl(capacity, clock), strict_extend_(strict_extend) {
    if (workers == 0) throw Error(Errc::bad_argument, "pool backend needs at least one worker");
    threads_.reserve(workers);
    for (unsigned i = 0; i < workers; ++i) threads_.emplace_back([this] { work(); });
  }

  ~PoolBackend() override {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  SubmitResult submit(const IoRequest& req) override {
    if (req.file.simulated) throw Error(Errc::bad_file, "pool backend needs a real file");
    if (req.total_length() == 0) return Completed{0};
    std::unique_lock lk(mu_);
    if (outstanding_ >= capacity_) return QueueFull{};
    if (strict_extend_ && req.kind == IoKind::write && extends_file(req)) {
      lk.unlock();
      return Completed{perform_now(req)};
    }
    const RequestId id{++next_id_};
    queue_.push_back(Job{id, req});
    ++outstanding_;
    lk.unlock();
    work_cv_.notify_one();
    return InFlight{id};
  }

  std::vector<CompletionRecord> poll(std::size_t max) override {
    std::lock_guard lk(mu_);
    return take_locked(max);
  }

  WaitResult wait(std::size_t min, Nanos timeout) override {
    std::unique_lock lk(mu_);
    const bool enough = done_cv_.wait_for(lk, timeout, [&] { return done_.size() >= min; });
    return {take_locked(done_.size()), !enough};
  }

  CompletionRecord wait_for(RequestId id) override {
    std::unique_lock lk(mu_);
    for (;;) {
      if (auto rec = take_id_locked(id)) return *rec;
      done_cv_.wait(lk);
    }
  }

 private:
  struct Job {
    RequestId id;
    IoRequest req;
  };

  static bool extends_file(const IoRequest& req) {
    struct stat st {};
    if (::fstat(req.file.fd, &st) != 0) return false;
    return req.offset + req.total_length() > static_cast<std::uint64_t>(st.st_size);
  }

  void work() {
    std::unique_lock lk(mu_);
    for (;;) {
      work_cv_.wait(lk, [&] { return stop_ || !queue_.empty(); });
      if (queue_.empty()) return;
      Job job = std::move(queue_.front());
      queue_.pop_front();
      lk.unlock();
      const std::int64_t result = perform_now(job.req);
      const Nanos at = clock_.now();
      lk.lock();
      done_.push_back(CompletionRecord{job.id, result, at});
      done_cv_.notify_all();
    }
  }

  const bool strict_extend_;
  bool stop_ = false;
  std::deque<Job> queue_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;
  std::vector<std::thread> threads_;
};

}  // namespace
}  // namespace detail

IoContext::IoContext(IoContextOptions options, Clock& clock)
    : options_(std::move(options)), clock_(clock) {
  if (options_.capacity == 0) throw Error(Errc::bad_argument, "I/O context capacity must be positive");
  if (options_.backend == Backend::simulated) {
    if (!options_.model) throw Error(Errc::bad_argument, "simulated backend requires a device model");
    impl_ = std::make_unique<detail::SimBackend>(options_.capacity, clock_, *options_.model);
  } else {
    impl_ = std::make_unique<detail::PoolBackend>(options_.capacity, clock_, options_.pool_workers,
                                                  options_.strict_extend);
  }
}

IoContext::~IoContext() = default;

SubmitResult IoContext::submit(const IoRequest& request) {
  request.validate();
  return impl_->submit(request);
}

std::vector<CompletionRecord> IoContext::poll_completions(std::size_t max) { return impl_->poll(max); }

WaitResult IoContext::wait_completions(std::size_t min, Nanos timeout) {
  if (min == 0) return {impl_->poll(SIZE_MAX), false};
  return impl_->wait(min, timeout);
}

CompletionRecord IoContext::wait_request(RequestId id) { return impl_->wait_for(id); }

std::size_t IoContext::outstanding() const { return impl_->outstanding(); }

}  // namespace tasio::io
