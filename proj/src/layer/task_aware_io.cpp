#include "tasio/task_aware_io.hpp"

#include <cerrno>
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>

#include "tasio/common/error.hpp"

namespace tasio {

namespace {

std::mutex g_attached_mu;
std::set<const rt::Runtime*> g_attached;

int errno_for(const Error& e) {
  switch (e.code()) {
    case Errc::misaligned:
    case Errc::bad_argument:
      return EINVAL;
    case Errc::bad_file:
      return EBADF;
    default:
      return EIO;
  }
}

std::optional<std::uint64_t> env_number(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long n = std::stoull(v, &used);
    if (used != std::string_view(v).size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(Errc::parse_error, std::string(name) + " is not a number: " + v);
  }
}

io::IoRequest make_request(io::IoKind kind, const io::FileHandle& file, const void* buf,
                           std::size_t count, off_t offset) {
  io::IoRequest req;
  req.kind = kind;
  req.file = file;
  req.direct = file.direct;
  req.offset = static_cast<std::uint64_t>(offset);
  req.segments = {io::Segment{static_cast<std::byte*>(const_cast<void*>(buf)), count}};
  return req;
}

io::IoRequest make_request(io::IoKind kind, const io::FileHandle& file, const iovec* iov,
                           int iovcnt, off_t offset) {
  io::IoRequest req;
  req.kind = kind;
  req.file = file;
  req.direct = file.direct;
  req.offset = static_cast<std::uint64_t>(offset);
  for (int i = 0; i < iovcnt; ++i) {
    req.segments.push_back(io::Segment{static_cast<std::byte*>(iov[i].iov_base), iov[i].iov_len});
  }
  return req;
}

}  // namespace

void TasioConfig::validate() const {
  if (max_in_flight == 0) throw Error(Errc::bad_argument, "max_in_flight must be at least 1");
  if (retry_sleep <= Nanos{0}) throw Error(Errc::bad_argument, "retry_sleep must be positive");
  if (poll_batch == 0) throw Error(Errc::bad_argument, "poll_batch must be at least 1");
  if (backend == io::Backend::simulated && !model) {
    throw Error(Errc::bad_argument, "simulated backend requires a device model");
  }
}

TaskAwareIo::TaskAwareIo(rt::Runtime& runtime, TasioConfig config)
    : rt_(runtime), config_(std::move(config)) {
  if (config_.read_env) {
    if (auto n = env_number("TASIO_MAX_INFLIGHT")) config_.max_in_flight = *n;
    if (auto us = env_number("TASIO_RETRY_US")) config_.retry_sleep = std::chrono::microseconds(*us);
  }
  config_.validate();
  {
    std::lock_guard lk(g_attached_mu);
    if (!g_attached.insert(&rt_).second) {
      throw Error(Errc::already_initialized, "task-aware I/O already attached to this runtime");
    }
  }
  try {
    io::IoContextOptions opts;
    opts.capacity = config_.max_in_flight;
    opts.backend = config_.backend;
    opts.model = config_.model;
    opts.pool_workers = config_.pool_workers;
    opts.strict_extend = config_.strict_extend;
    ctx_ = std::make_unique<io::IoContext>(std::move(opts), rt_.clock());
    service_ = rt_.register_polling_service(
        rt::PollingService{"tasio", [this] { return poll(); }, rt_.config().poll_period});
  } catch (...) {
    std::lock_guard lk(g_attached_mu);
    g_attached.erase(&rt_);
    throw;
  }
}

TaskAwareIo::~TaskAwareIo() {
  try {
    shutdown();
  } catch (const std::exception& e) {
    std::cerr << "tasio: shutdown failed: " << e.what() << '\n';
  }
}

void TaskAwareIo::shutdown() {
  {
    std::lock_guard lk(mu_);
    if (!service_) return;
    shutting_down_ = true;
  }
  if (rt_.in_task()) {
    while (pending_ops() > 0) rt_.clock().sleep_for(rt_.config().poll_period);
  } else if (rt_.running()) {
    std::unique_lock lk(mu_);
    drained_cv_.wait(lk, [&] { return pending_.empty() && deferred_.empty(); });
  } else {
    while (pending_ops() > 0) {
      handle_records(ctx_->wait_completions(1, config_.retry_sleep).records);
      retry_deferred();
    }
  }
  rt_.unregister_polling_service(*service_);
  std::size_t late = 0;
  {
    std::lock_guard lk(mu_);
    service_.reset();
    late = stats_.late_submissions;
  }
  {
    std::lock_guard lk(g_attached_mu);
    g_attached.erase(&rt_);
  }
  if (late > 0) {
    std::cerr << "tasio: warning: " << late << " operation(s) were issued during shutdown\n";
  }
}

std::size_t TaskAwareIo::open_log_locked(const io::IoRequest& req, bool blocking, rt::TaskId task) {
  if (shutting_down_) ++stats_.late_submissions;
  OpRecord rec;
  rec.op = log_.size();
  rec.task = task;
  rec.blocking = blocking;
  rec.kind = req.kind;
  rec.length = req.total_length();
  rec.issued = rt_.clock().now();
  log_.push_back(rec);
  return log_.size() - 1;
}

void TaskAwareIo::note_submit_locked() {
  ++stats_.submitted;
  const std::size_t o = ctx_->outstanding();
  stats_.max_outstanding = std::max(stats_.max_outstanding, o);
  if (o > config_.max_in_flight) ++stats_.cap_violations;
}

ssize_t TaskAwareIo::blocking_call(io::IoRequest req) {
  if (!rt_.in_task()) throw Error(Errc::no_task_context, "blocking I/O wrapper outside a task");
  try {
    req.validate();
  } catch (const Error& e) {
    errno = errno_for(e);
    return -1;
  }
  if (req.total_length() == 0) return 0;

  const rt::TaskId me = rt_.current_task();
  std::int64_t result = 0;
  std::uint64_t key = 0;
  {
    std::unique_lock lk(mu_);
    const std::size_t li = open_log_locked(req, true, me);
    for (;;) {
      io::SubmitResult r;
      try {
        r = ctx_->submit(req);
      } catch (const Error& e) {
        log_[li].result = -errno_for(e);
        errno = errno_for(e);
        return -1;
      }
      if (std::holds_alternative<io::QueueFull>(r)) {
        if (log_[li].retries++ == 0) ++stats_.retried_ops;
        lk.unlock();
        rt_.clock().sleep_for(config_.retry_sleep);
        lk.lock();
        continue;
      }
      log_[li].accepted = rt_.clock().now();
      if (const auto* c = std::get_if<io::Completed>(&r)) {
        log_[li].completed = log_[li].accepted;
        log_[li].result = c->result;
        if (c->result < 0) {
          errno = static_cast<int>(-c->result);
          return -1;
        }
        return static_cast<ssize_t>(c->result);
      }
      key = io::raw(std::get<io::InFlight>(r).id);
      note_submit_locked();
      Pending op;
      op.log_index = li;
      op.blocking = true;
      op.task = me;
      op.blocking_result = &result;
      pending_.emplace(key, op);
      break;
    }
  }

  rt_.pause_current_task([this, key](rt::ResumeHandle h) {
    std::unique_lock lk(mu_);
    auto it = pending_.find(key);
    if (!it->second.finished) {
      it->second.handle = h;
      return;
    }
    pending_.erase(it);
    ++stats_.resumes;
    if (pending_.empty() && deferred_.empty()) drained_cv_.notify_all();
    lk.unlock();
    rt_.resume_task(h);
  });

  if (result < 0) {
    errno = static_cast<int>(-result);
    return -1;
  }
  return static_cast<ssize_t>(result);
}

void TaskAwareIo::finish_nonblocking_locked(Pending& op, std::int64_t result, Nanos at) {
  OpRecord& rec = log_[op.log_index];
  rec.completed = at;
  rec.result = result;
  if (op.slot != nullptr) {
    op.slot->result = result;
    op.slot->done = true;
  }
  if (result < 0) errors_[rt::raw(op.task)].push_back(static_cast<int>(-result));
  ++stats_.decrements;
}

void TaskAwareIo::nonblocking_call(io::IoRequest req, IoResult* slot) {
  if (!rt_.in_task()) throw Error(Errc::no_task_context, "non-blocking I/O call outside a task");
  const rt::TaskId me = rt_.current_task();
  rt_.increase_event_counter(me, 1);

  std::optional<Nanos> wake;
  bool release = false;
  {
    std::lock_guard lk(mu_);
    Pending op;
    op.log_index = open_log_locked(req, false, me);
    op.task = me;
    op.slot = slot;
    const Nanos now = rt_.clock().now();
    io::SubmitResult r;
    try {
      r = ctx_->submit(req);
    } catch (const Error& e) {
      r = io::Completed{-errno_for(e)};
    }
    if (std::holds_alternative<io::QueueFull>(r)) {
      ++log_[op.log_index].retries;
      ++stats_.retried_ops;
      const Nanos at = now + config_.retry_sleep;
      deferred_.push_back(Deferred{std::move(req), op, at});
      wake = at;
    } else if (const auto* c = std::get_if<io::Completed>(&r)) {
      log_[op.log_index].accepted = now;
      finish_nonblocking_locked(op, c->result, now);
      release = true;
    } else {
      log_[op.log_index].accepted = now;
      note_submit_locked();
      pending_.emplace(io::raw(std::get<io::InFlight>(r).id), op);
    }
  }
  if (wake) rt_.clock().notify_at(*wake);
  if (release) rt_.decrease_event_counter(me, 1);
}

std::size_t TaskAwareIo::handle_records(const std::vector<io::CompletionRecord>& records) {
  std::vector<rt::ResumeHandle> resumes;
  std::vector<rt::TaskId> decrements;
  {
    std::lock_guard lk(mu_);
    for (const io::CompletionRecord& rec : records) {
      auto it = pending_.find(io::raw(rec.id));
      if (it == pending_.end()) continue;
      Pending& op = it->second;
      ++stats_.completed;
      if (op.blocking) {
        log_[op.log_index].completed = rec.completion_time;
        log_[op.log_index].result = rec.result;
        *op.blocking_result = rec.result;
        if (op.handle) {
          resumes.push_back(*op.handle);
          ++stats_.resumes;
          pending_.erase(it);
        } else {
          op.finished = true;  // the pause callback resumes it
        }
      } else {
        finish_nonblocking_locked(op, rec.result, rec.completion_time);
        decrements.push_back(op.task);
        pending_.erase(it);
      }
    }
  }
  for (const rt::ResumeHandle& h : resumes) rt_.resume_task(h);
  for (const rt::TaskId t : decrements) rt_.decrease_event_counter(t, 1);
  {
    std::lock_guard lk(mu_);
    if (pending_.empty() && deferred_.empty()) drained_cv_.notify_all();
  }
  return records.size();
}

void TaskAwareIo::retry_deferred() {
  std::vector<rt::TaskId> decrements;
  std::optional<Nanos> wake;
  {
    std::lock_guard lk(mu_);
    while (!deferred_.empty()) {
      Deferred& d = deferred_.front();
      const Nanos now = rt_.clock().now();
      if (d.retry_at > now) {
        wake = d.retry_at;
        break;
      }
      io::SubmitResult r;
      try {
        r = ctx_->submit(d.request);
      } catch (const Error& e) {
        r = io::Completed{-errno_for(e)};
      }
      if (std::holds_alternative<io::QueueFull>(r)) {
        ++log_[d.op.log_index].retries;
        d.retry_at = now + config_.retry_sleep;
        wake = d.retry_at;
        break;
      }
      log_[d.op.log_index].accepted = now;
      if (const auto* c = std::get_if<io::Completed>(&r)) {
        finish_nonblocking_locked(d.op, c->result, now);
        decrements.push_back(d.op.task);
      } else {
        note_submit_locked();
        pending_.emplace(io::raw(std::get<io::InFlight>(r).id), d.op);
      }
      deferred_.pop_front();
    }
  }
  if (wake) rt_.clock().notify_at(*wake);
  for (const rt::TaskId t : decrements) rt_.decrease_event_counter(t, 1);
}

std::size_t TaskAwareIo::poll() {
  if (in_poll_.exchange(true)) {
    std::lock_guard lk(mu_);
    ++stats_.reentrant_polls;
    return 0;
  }
  std::size_t n = 0;
  try {
    n = handle_records(ctx_->poll_completions(config_.poll_batch));
    retry_deferred();
  } catch (...) {
    in_poll_.store(false);
    throw;
  }
  in_poll_.store(false);
  return n;
}

ssize_t TaskAwareIo::pread(const io::FileHandle& file, void* buf, std::size_t count, off_t offset) {
  return blocking_call(make_request(io::IoKind::read, file, buf, count, offset));
}
ssize_t TaskAwareIo::pwrite(const io::FileHandle& file, const void* buf, std::size_t count,
                            off_t offset) {
  return blocking_call(make_request(io::IoKind::write, file, buf, count, offset));
}
ssize_t TaskAwareIo::preadv(const io::FileHandle& file, const iovec* iov, int iovcnt, off_t offset) {
  return blocking_call(make_request(io::IoKind::read, file, iov, iovcnt, offset));
}
ssize_t TaskAwareIo::pwritev(const io::FileHandle& file, const iovec* iov, int iovcnt,
                             off_t offset) {
  return blocking_call(make_request(io::IoKind::write, file, iov, iovcnt, offset));
}

void TaskAwareIo::ta_pread(const io::FileHandle& file, void* buf, std::size_t count, off_t offset,
                           IoResult* slot) {
  nonblocking_call(make_request(io::IoKind::read, file, buf, count, offset), slot);
}
void TaskAwareIo::ta_pwrite(const io::FileHandle& file, const void* buf, std::size_t count,
                            off_t offset, IoResult* slot) {
  nonblocking_call(make_request(io::IoKind::write, file, buf, count, offset), slot);
}
void TaskAwareIo::ta_preadv(const io::FileHandle& file, const iovec* iov, int iovcnt, off_t offset,
                            IoResult* slot) {
  nonblocking_call(make_request(io::IoKind::read, file, iov, iovcnt, offset), slot);
}
void TaskAwareIo::ta_pwritev(const io::FileHandle& file, const iovec* iov, int iovcnt,
                             off_t offset, IoResult* slot) {
  nonblocking_call(make_request(io::IoKind::write, file, iov, iovcnt, offset), slot);
}

std::vector<int> TaskAwareIo::last_errors(rt::TaskId task) const {
  std::lock_guard lk(mu_);
  auto it = errors_.find(rt::raw(task));
  return it == errors_.end() ? std::vector<int>{} : it->second;
}

std::size_t TaskAwareIo::pending_ops() const {
  std::lock_guard lk(mu_);
  return pending_.size() + deferred_.size();
}

TasioStats TaskAwareIo::stats() const {
  std::lock_guard lk(mu_);
  return stats_;
}

std::vector<OpRecord> TaskAwareIo::op_log() const {
  std::lock_guard lk(mu_);
  return log_;
}

}  // namespace tasio
