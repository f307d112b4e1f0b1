#include "tasio/runtime/runtime.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

#include <boost/context/fiber.hpp>

#include "busy_loop.hpp"
#include "tasio/common/error.hpp"

namespace ctx = boost::context;

namespace tasio::rt {

std::string_view to_string(TaskState s) noexcept {
  switch (s) {
    case TaskState::created: return "created";
    case TaskState::ready: return "ready";
    case TaskState::running: return "running";
    case TaskState::paused: return "paused";
    case TaskState::events_pending: return "events_pending";
    case TaskState::completed: return "completed";
  }
  return "unknown";
}

void RuntimeConfig::validate() const {
  if (workers == 0) throw Error(Errc::bad_argument, "workers must be >= 1");
  if (poll_period.count() <= 0) throw Error(Errc::bad_argument, "poll period must be positive");
}

namespace {

constexpr std::size_t kStackSize = 256 * 1024;

/// Stack cache shared by all task contexts of one runtime.
class StackPool {
 public:
  ~StackPool() {
    for (void* p : free_) std::free(p);
  }

  ctx::stack_context allocate() {
    void* p = nullptr;
    {
      std::lock_guard lk(mu_);
      if (!free_.empty()) {
        p = free_.back();
        free_.pop_back();
      }
    }
    if (p == nullptr) {
      p = std::aligned_alloc(64, kStackSize);
      if (p == nullptr) throw std::bad_alloc();
    }
    ctx::stack_context sc;
    sc.size = kStackSize;
    sc.sp = static_cast<char*>(p) + kStackSize;
    return sc;
  }

  void deallocate(ctx::stack_context& sc) noexcept {
    void* p = static_cast<char*>(sc.sp) - sc.size;
    std::lock_guard lk(mu_);
    free_.push_back(p);
  }

 private:
  std::mutex mu_;
  std::vector<void*> free_;
};

struct PooledStack {
  StackPool* pool;
  ctx::stack_context allocate() { return pool->allocate(); }
  void deallocate(ctx::stack_context& sc) noexcept { pool->deallocate(sc); }
};

enum class YieldKind : std::uint8_t { none, pause, block, finished };

struct Task {
  TaskId id{0};
  std::function<void()> body;
  TaskState state = TaskState::created;
  bool started = false;
  bool body_done = false;
  std::uint32_t unmet = 0;
  std::uint64_t events = 0;
  std::uint64_t pause_token = 0;
  std::uint64_t edge_mark = 0;
  std::vector<Task*> successors;
  std::vector<ResourceId> resources;

  ctx::fiber context;
  ctx::fiber scheduler;
  YieldKind yield = YieldKind::none;
  Nanos wake_at{0};
  std::function<void(ResumeHandle)> on_paused;
  int agent = -1;
};

struct Service {
  ServiceId id{0};
  PollingService reg;
  std::mutex run_mu;
  bool active = true;
};

struct ExecContext {
  const void* runtime = nullptr;
  Task* task = nullptr;
  const Service* service = nullptr;
};

thread_local ExecContext tl_exec;

// Task contexts migrate between OS threads in real mode; the accessor must
// never be folded across a context switch.
#if defined(__GNUC__) && !defined(__clang__)
[[gnu::noinline, gnu::noipa]]
#else
[[gnu::noinline]]
#endif
ExecContext& exec_context() {
  return tl_exec;
}

struct VirtualEvent {
  enum Kind : std::uint8_t { continue_agent, tick, wakeup };
  std::int64_t time;
  std::uint64_t seq;
  Kind kind;
  int agent;

  bool operator>(const VirtualEvent& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

}  // namespace

class RuntimeImpl {
 public:
  explicit RuntimeImpl(RuntimeConfig config);
  ~RuntimeImpl();

  class RuntimeClock final : public Clock {
   public:
    explicit RuntimeClock(RuntimeImpl& rt) : rt_(rt) {}
    Nanos now() const override { return rt_.now(); }
    void sleep_until(Nanos t) override { rt_.sleep_until(t); }
    void notify_at(Nanos t) override { rt_.notify_at(t); }
    bool is_virtual() const noexcept override { return rt_.virtual_mode(); }

   private:
    RuntimeImpl& rt_;
  };

  bool virtual_mode() const noexcept { return cfg_.clock == ClockMode::virtual_time; }

  Nanos now() const {
    if (virtual_mode()) return Nanos{vnow_.load(std::memory_order_acquire)};
    return steady_.now();
  }

  ResourceId register_resource();
  TaskId spawn(std::function<void()> body, std::span<const ResourceId> reads,
               std::span<const ResourceId> writes);
  RunStats run_to_completion();
  void pause_current_task(std::function<void(ResumeHandle)> on_paused);
  void resume_task(ResumeHandle handle);
  void increase_event_counter(TaskId task, std::uint32_t n);
  void decrease_event_counter(TaskId task, std::uint32_t n);
  ServiceId register_polling_service(PollingService service);
  void unregister_polling_service(ServiceId id);
  TaskId current_task() const;
  bool in_task() const noexcept;
  void busy_wait(Nanos d);
  void sleep_until(Nanos t);
  void notify_at(Nanos t);
  void shutdown();

  TaskState state(TaskId id) const;
  std::uint64_t event_count(TaskId id) const;
  std::size_t task_count() const;
  std::size_t live_contexts() const noexcept { return contexts_.load(); }
  std::size_t paused_tasks() const;
  std::vector<TraceRecord> trace() const;

  RuntimeConfig cfg_;
  RuntimeClock clock_{*this};
  std::atomic<bool> running_{false};

 private:
  struct Resource {
    Task* last_writer = nullptr;
    std::vector<Task*> readers;
  };

  Task& task_locked(TaskId id);
  const Task& task_locked(TaskId id) const;
  void add_edge_locked(Task* pred, Task& succ);
  void make_ready_locked(Task& t);
  void complete_locked(Task& t);
  void trace_locked(TraceEvent e, std::uint64_t id);
  void record_error(std::exception_ptr e);
  bool has_wake_source_locked() const;
  std::string stuck_report_locked() const;

  void run_slice(Task& t);
  void yield_to_scheduler(Task& t);
  void handle_yield(Task& t);
  void poll_round();
  bool services_registered() const;

  RunStats run_virtual();
  void dispatch_virtual();
  void push_event_locked(std::int64_t t, VirtualEvent::Kind kind, int agent = -1);
  void schedule_tick_locked(std::int64_t t);

  RunStats run_real();
  void worker_loop();
  void poller_loop();

  StackPool stacks_;
  mutable std::mutex mu_;
  std::condition_variable work_cv_;
  std::condition_variable done_cv_;

  std::deque<Task> tasks_;
  std::vector<Resource> resources_;
  std::deque<Task*> ready_;
  std::size_t live_ = 0;
  std::size_t busy_ = 0;
  std::size_t paused_ = 0;
  std::size_t pending_ = 0;
  std::uint64_t executed_ = 0;
  bool shut_down_ = false;
  std::exception_ptr first_error_;
  std::optional<Error> deadlock_;
  std::atomic<std::size_t> contexts_{0};
  std::int64_t last_progress_ = 0;
  std::int64_t last_complete_ = 0;

  mutable std::mutex services_mu_;
  std::map<std::uint64_t, std::shared_ptr<Service>> services_;
  std::uint64_t next_service_ = 1;

  bool tracing_ = false;
  std::vector<TraceRecord> trace_;

  // virtual clock
  std::atomic<std::int64_t> vnow_{0};
  std::priority_queue<VirtualEvent, std::vector<VirtualEvent>, std::greater<>> events_;
  std::uint64_t event_seq_ = 0;
  std::set<std::int64_t> wakeups_;
  bool tick_pending_ = false;
  std::vector<Task*> agents_;

  // real clock
  SteadyClock steady_;
  std::atomic<bool> stop_{false};
};

RuntimeImpl::RuntimeImpl(RuntimeConfig config) : cfg_(config), tracing_(config.trace) {
  cfg_.validate();
  if (!virtual_mode()) detail::BusyLoop::instance().ensure_calibrated();
}

RuntimeImpl::~RuntimeImpl() {
  // Suspended contexts unwind here; their stacks go back to the pool, which
  // is destroyed last.
  tasks_.clear();
}

ResourceId RuntimeImpl::register_resource() {
  std::lock_guard lk(mu_);
  resources_.emplace_back();
  return ResourceId{resources_.size() - 1};
}

Task& RuntimeImpl::task_locked(TaskId id) {
  const auto idx = raw(id);
  if (idx == 0 || idx > tasks_.size()) {
    throw Error(Errc::bad_argument, "unknown task " + std::to_string(idx));
  }
  return tasks_[idx - 1];
}

const Task& RuntimeImpl::task_locked(TaskId id) const {
  return const_cast<RuntimeImpl*>(this)->task_locked(id);
}

void RuntimeImpl::trace_locked(TraceEvent e, std::uint64_t id) {
  if (tracing_) trace_.push_back(TraceRecord{now().count(), e, id});
}

void RuntimeImpl::add_edge_locked(Task* pred, Task& succ) {
  if (pred == nullptr || pred == &succ || pred->state == TaskState::completed) return;
  if (pred->edge_mark == raw(succ.id)) return;
  pred->edge_mark = raw(succ.id);
  pred->successors.push_back(&succ);
  ++succ.unmet;
}

TaskId RuntimeImpl::spawn(std::function<void()> body, std::span<const ResourceId> reads,
                          std::span<const ResourceId> writes) {
  if (!body) throw Error(Errc::bad_argument, "empty task body");
  std::lock_guard lk(mu_);
  if (shut_down_) throw Error(Errc::shut_down, "spawn after shutdown");
  for (auto span : {reads, writes}) {
    for (ResourceId r : span) {
      if (raw(r) >= resources_.size()) {
        throw Error(Errc::unknown_resource, "resource " + std::to_string(raw(r)));
      }
    }
  }

  Task& t = tasks_.emplace_back();
  t.id = TaskId{tasks_.size()};
  t.body = std::move(body);
  ++live_;
  trace_locked(TraceEvent::spawn, raw(t.id));

  auto is_written = [&](ResourceId r) {
    return std::find(writes.begin(), writes.end(), r) != writes.end();
  };
  for (ResourceId r : reads) {
    if (is_written(r)) continue;
    Resource& res = resources_[raw(r)];
    add_edge_locked(res.last_writer, t);
    if (res.readers.size() >= 64) {
      std::erase_if(res.readers, [](Task* p) { return p->state == TaskState::completed; });
    }
    res.readers.push_back(&t);
    t.resources.push_back(r);
  }
  for (ResourceId r : writes) {
    Resource& res = resources_[raw(r)];
    add_edge_locked(res.last_writer, t);
    for (Task* reader : res.readers) add_edge_locked(reader, t);
    res.readers.clear();
    res.last_writer = &t;
    t.resources.push_back(r);
  }

  if (t.unmet == 0) make_ready_locked(t);
  return t.id;
}

void RuntimeImpl::make_ready_locked(Task& t) {
  t.state = TaskState::ready;
  ready_.push_back(&t);
  trace_locked(TraceEvent::ready, raw(t.id));
  if (!virtual_mode()) work_cv_.notify_one();
}

void RuntimeImpl::complete_locked(Task& t) {
  if (t.state == TaskState::events_pending) --pending_;
  t.state = TaskState::completed;
  trace_locked(TraceEvent::complete, raw(t.id));
  --live_;
  ++executed_;
  last_progress_ = now().count();
  last_complete_ = last_progress_;

  std::vector<Task*> released;
  for (Task* s : t.successors) {
    if (--s->unmet == 0) released.push_back(s);
  }
  std::sort(released.begin(), released.end(),
            [](const Task* a, const Task* b) { return raw(a->id) < raw(b->id); });
  for (Task* s : released) make_ready_locked(*s);
  std::vector<Task*>().swap(t.successors);

  if (live_ == 0) {
    done_cv_.notify_all();
    work_cv_.notify_all();
  }
}

void RuntimeImpl::record_error(std::exception_ptr e) {
  std::lock_guard lk(mu_);
  if (!first_error_) first_error_ = e;
}

void RuntimeImpl::run_slice(Task& t) {
  ExecContext& ec = exec_context();
  ec.runtime = this;
  ec.task = &t;
  t.yield = YieldKind::none;
  if (!t.context) {
    contexts_.fetch_add(1);
    t.context = ctx::fiber(std::allocator_arg, PooledStack{&stacks_},
                           [this, task = &t](ctx::fiber&& sched) {
                             task->scheduler = std::move(sched);
                             try {
                               auto body = std::move(task->body);
                               body();
                             } catch (const ctx::detail::forced_unwind&) {
                               throw;
                             } catch (...) {
                               record_error(std::current_exception());
                             }
                             task->yield = YieldKind::finished;
                             return std::move(task->scheduler);
                           });
  }
  t.context = std::move(t.context).resume();
  ExecContext& after = exec_context();
  after.task = nullptr;
  after.runtime = nullptr;
}

void RuntimeImpl::yield_to_scheduler(Task& t) {
  t.scheduler = std::move(t.scheduler).resume();
}

void RuntimeImpl::handle_yield(Task& t) {
  switch (t.yield) {
    case YieldKind::finished: {
      contexts_.fetch_sub(1);
      std::lock_guard lk(mu_);
      --busy_;
      if (virtual_mode()) agents_[t.agent] = nullptr;
      t.agent = -1;
      t.body_done = true;
      trace_locked(TraceEvent::body_end, raw(t.id));
      last_progress_ = now().count();
      if (t.events == 0) {
        complete_locked(t);
      } else {
        t.state = TaskState::events_pending;
        ++pending_;
      }
      return;
    }
    case YieldKind::pause: {
      std::function<void(ResumeHandle)> cb;
      ResumeHandle handle;
      {
        std::lock_guard lk(mu_);
        --busy_;
        if (virtual_mode()) agents_[t.agent] = nullptr;
        t.agent = -1;
        t.state = TaskState::paused;
        ++paused_;
        handle = ResumeHandle(t.id, ++t.pause_token);
        trace_locked(TraceEvent::pause, raw(t.id));
        last_progress_ = now().count();
        cb = std::move(t.on_paused);
        t.on_paused = nullptr;
      }
      if (cb) {
        try {
          cb(handle);
        } catch (...) {
          record_error(std::current_exception());
        }
      }
      return;
    }
    case YieldKind::block: {
      std::lock_guard lk(mu_);
      push_event_locked(std::max(t.wake_at.count(), now().count()), VirtualEvent::continue_agent,
                        t.agent);
      return;
    }
    case YieldKind::none:
      std::abort();
  }
}

void RuntimeImpl::pause_current_task(std::function<void(ResumeHandle)> on_paused) {
  ExecContext& ec = exec_context();
  if (ec.runtime != this || ec.task == nullptr) {
    throw Error(Errc::no_task_context, "pause_current_task outside a task body");
  }
  Task& t = *ec.task;
  t.on_paused = std::move(on_paused);
  t.yield = YieldKind::pause;
  yield_to_scheduler(t);
}

void RuntimeImpl::resume_task(ResumeHandle handle) {
  std::lock_guard lk(mu_);
  if (raw(handle.task()) == 0 || raw(handle.task()) > tasks_.size()) {
    throw Error(Errc::invalid_handle, "unknown task in handle");
  }
  Task& t = task_locked(handle.task());
  if (handle.token() == 0 || handle.token() > t.pause_token) {
    throw Error(Errc::invalid_handle, "handle was never issued");
  }
  if (t.state == TaskState::completed) {
    throw Error(Errc::task_completed, "resume of completed task " + std::to_string(raw(t.id)));
  }
  if (handle.token() < t.pause_token || t.state != TaskState::paused) {
    throw Error(Errc::double_resume, "task " + std::to_string(raw(t.id)));
  }
  --paused_;
  last_progress_ = now().count();
  make_ready_locked(t);
}

void RuntimeImpl::increase_event_counter(TaskId id, std::uint32_t n) {
  if (n == 0) throw Error(Errc::bad_argument, "event increment must be positive");
  std::lock_guard lk(mu_);
  Task& t = task_locked(id);
  if (t.state == TaskState::completed) {
    throw Error(Errc::task_completed, "task " + std::to_string(raw(id)));
  }
  if (t.body_done) {
    throw Error(Errc::illegal_increment, "task " + std::to_string(raw(id)));
  }
  t.events += n;
}

void RuntimeImpl::decrease_event_counter(TaskId id, std::uint32_t n) {
  if (n == 0) throw Error(Errc::bad_argument, "event decrement must be positive");
  std::lock_guard lk(mu_);
  Task& t = task_locked(id);
  if (t.events < n) {
    throw Error(Errc::counter_underflow, "task " + std::to_string(raw(id)) + " has " +
                                             std::to_string(t.events) + " events, decrement " +
                                             std::to_string(n));
  }
  t.events -= n;
  last_progress_ = now().count();
  if (t.events == 0 && t.body_done) complete_locked(t);
}

ServiceId RuntimeImpl::register_polling_service(PollingService service) {
  if (!service.callback) throw Error(Errc::bad_argument, "empty polling callback");
  auto s = std::make_shared<Service>();
  s->reg = std::move(service);
  {
    std::lock_guard lk(services_mu_);
    s->id = ServiceId{next_service_++};
    services_.emplace(raw(s->id), s);
  }
  if (virtual_mode() && running_.load()) {
    std::lock_guard lk(mu_);
    schedule_tick_locked(now().count() + cfg_.poll_period.count());
  }
  return s->id;
}

void RuntimeImpl::unregister_polling_service(ServiceId id) {
  std::shared_ptr<Service> s;
  {
    std::lock_guard lk(services_mu_);
    auto it = services_.find(raw(id));
    if (it == services_.end()) {
      throw Error(Errc::duplicate_unregister, "service " + std::to_string(raw(id)));
    }
    s = it->second;
    services_.erase(it);
  }
  if (exec_context().service == s.get()) {
    s->active = false;
  } else {
    std::lock_guard run(s->run_mu);
    s->active = false;
  }
}

bool RuntimeImpl::services_registered() const {
  std::lock_guard lk(services_mu_);
  return !services_.empty();
}

void RuntimeImpl::poll_round() {
  std::vector<std::shared_ptr<Service>> snapshot;
  {
    std::lock_guard lk(services_mu_);
    snapshot.reserve(services_.size());
    for (auto& [id, s] : services_) snapshot.push_back(s);
  }
  for (auto& s : snapshot) {
    std::unique_lock run(s->run_mu);
    if (!s->active) continue;
    {
      std::lock_guard lk(mu_);
      trace_locked(TraceEvent::poll, raw(s->id));
    }
    ExecContext& ec = exec_context();
    const ExecContext saved = ec;
    ec = ExecContext{this, nullptr, s.get()};
    try {
      s->reg.callback();
    } catch (...) {
      record_error(std::current_exception());
    }
    exec_context() = saved;
  }
}

TaskId RuntimeImpl::current_task() const {
  const ExecContext& ec = exec_context();
  if (ec.runtime != this || ec.task == nullptr) {
    throw Error(Errc::no_task_context, "current_task outside a task body");
  }
  return ec.task->id;
}

bool RuntimeImpl::in_task() const noexcept {
  const ExecContext& ec = exec_context();
  return ec.runtime == this && ec.task != nullptr;
}

void RuntimeImpl::busy_wait(Nanos d) {
  if (d.count() <= 0) return;
  if (virtual_mode()) {
    sleep_until(now() + d);
  } else {
    detail::BusyLoop::instance().spin(d);
  }
}

void RuntimeImpl::sleep_until(Nanos t) {
  if (!virtual_mode()) {
    if (t > now()) steady_.sleep_until(t);
    return;
  }
  ExecContext& ec = exec_context();
  if (ec.runtime == this && ec.task != nullptr) {
    if (t <= now()) return;
    Task& task = *ec.task;
    task.wake_at = t;
    task.yield = YieldKind::block;
    yield_to_scheduler(task);
    return;
  }
  if (ec.runtime == this && ec.service != nullptr) {
    throw Error(Errc::bad_argument, "polling callbacks cannot block on the virtual clock");
  }
  if (running_.load()) {
    throw Error(Errc::no_task_context, "virtual sleep from outside the runtime while it runs");
  }
  std::int64_t cur = vnow_.load();
  while (cur < t.count() && !vnow_.compare_exchange_weak(cur, t.count())) {
  }
}

void RuntimeImpl::notify_at(Nanos t) {
  if (!virtual_mode()) return;
  std::lock_guard lk(mu_);
  const std::int64_t when = std::max(t.count(), now().count());
  if (wakeups_.insert(when).second) push_event_locked(when, VirtualEvent::wakeup);
}

void RuntimeImpl::shutdown() {
  std::lock_guard lk(mu_);
  shut_down_ = true;
}

TaskState RuntimeImpl::state(TaskId id) const {
  std::lock_guard lk(mu_);
  return task_locked(id).state;
}

std::uint64_t RuntimeImpl::event_count(TaskId id) const {
  std::lock_guard lk(mu_);
  return task_locked(id).events;
}

std::size_t RuntimeImpl::task_count() const {
  std::lock_guard lk(mu_);
  return tasks_.size();
}

std::size_t RuntimeImpl::paused_tasks() const {
  std::lock_guard lk(mu_);
  return paused_;
}

std::vector<TraceRecord> RuntimeImpl::trace() const {
  std::lock_guard lk(mu_);
  return trace_;
}

bool RuntimeImpl::has_wake_source_locked() const {
  if (paused_ + pending_ == 0) return false;
  return !wakeups_.empty() || services_registered();
}

std::string RuntimeImpl::stuck_report_locked() const {
  std::ostringstream os;
  std::size_t listed = 0;
  for (const Task& t : tasks_) {
    if (t.state == TaskState::completed || t.state == TaskState::ready) continue;
    if (listed++ == 16) {
      os << " ...";
      break;
    }
    os << " [task " << raw(t.id) << ' ' << to_string(t.state);
    if (t.state == TaskState::created) {
      os << " waiting on resources";
      for (ResourceId r : t.resources) os << ' ' << raw(r);
    }
    os << ']';
  }
  return os.str();
}

RunStats RuntimeImpl::run_to_completion() {
  {
    std::lock_guard lk(mu_);
    if (tasks_.empty()) throw Error(Errc::bad_argument, "run_to_completion with no tasks");
    deadlock_.reset();
  }
  running_.store(true);
  RunStats stats;
  try {
    stats = virtual_mode() ? run_virtual() : run_real();
  } catch (...) {
    running_.store(false);
    throw;
  }
  running_.store(false);
  std::exception_ptr err;
  {
    std::lock_guard lk(mu_);
    if (deadlock_) throw *deadlock_;
    err = std::exchange(first_error_, nullptr);
  }
  if (err) std::rethrow_exception(err);
  return stats;
}

// ---------------------------------------------------------------------------
// Virtual clock driver

void RuntimeImpl::push_event_locked(std::int64_t t, VirtualEvent::Kind kind, int agent) {
  events_.push(VirtualEvent{t, event_seq_++, kind, agent});
}

void RuntimeImpl::schedule_tick_locked(std::int64_t t) {
  if (tick_pending_) return;
  tick_pending_ = true;
  push_event_locked(t, VirtualEvent::tick);
}

void RuntimeImpl::dispatch_virtual() {
  for (;;) {
    Task* t = nullptr;
    {
      std::lock_guard lk(mu_);
      if (ready_.empty()) return;
      auto free_agent = std::find(agents_.begin(), agents_.end(), nullptr);
      if (free_agent == agents_.end()) return;
      t = ready_.front();
      ready_.pop_front();
      t->agent = static_cast<int>(free_agent - agents_.begin());
      *free_agent = t;
      ++busy_;
      t->state = TaskState::running;
      trace_locked(t->started ? TraceEvent::resume : TraceEvent::start, raw(t->id));
      t->started = true;
    }
    run_slice(*t);
    handle_yield(*t);
  }
}

RunStats RuntimeImpl::run_virtual() {
  const std::int64_t start = now().count();
  std::uint64_t executed_before = 0;
  {
    std::lock_guard lk(mu_);
    executed_before = executed_;
    agents_.assign(cfg_.workers, nullptr);
    last_progress_ = start;
    last_complete_ = start;
    if (services_registered()) schedule_tick_locked(start + cfg_.poll_period.count());
  }

  for (;;) {
    dispatch_virtual();
    VirtualEvent ev{};
    {
      std::lock_guard lk(mu_);
      if (live_ == 0) break;
      if ((ready_.empty() && busy_ == 0 && !has_wake_source_locked()) || events_.empty()) {
        deadlock_ = Error(Errc::deadlock, "no runnable task and no wake source:" +
                                              stuck_report_locked());
        break;
      }
      ev = events_.top();
      events_.pop();
      if (ev.time > vnow_.load()) vnow_.store(ev.time, std::memory_order_release);
      if (ev.time - last_progress_ > cfg_.stall_limit.count()) {
        deadlock_ = Error(Errc::deadlock, "virtual time stalled:" + stuck_report_locked());
        break;
      }
      if (ev.kind == VirtualEvent::tick) tick_pending_ = false;
      if (ev.kind == VirtualEvent::wakeup) wakeups_.erase(ev.time);
    }
    switch (ev.kind) {
      case VirtualEvent::continue_agent: {
        Task* t = nullptr;
        {
          std::lock_guard lk(mu_);
          t = agents_[ev.agent];
        }
        run_slice(*t);
        handle_yield(*t);
        break;
      }
      case VirtualEvent::tick: {
        poll_round();
        std::lock_guard lk(mu_);
        if (live_ > 0 && services_registered()) {
          schedule_tick_locked(ev.time + cfg_.poll_period.count());
        }
        break;
      }
      case VirtualEvent::wakeup:
        poll_round();
        break;
    }
  }

  std::lock_guard lk(mu_);
  events_ = {};
  wakeups_.clear();
  tick_pending_ = false;
  RunStats stats;
  stats.elapsed = Nanos{last_complete_ - start};
  stats.tasks_executed = executed_ - executed_before;
  return stats;
}

// ---------------------------------------------------------------------------
// Real clock driver

RunStats RuntimeImpl::run_real() {
  const std::int64_t start = now().count();
  std::uint64_t executed_before = 0;
  {
    std::lock_guard lk(mu_);
    executed_before = executed_;
    last_complete_ = start;
  }
  stop_.store(false);
  std::vector<std::thread> workers;
  workers.reserve(cfg_.workers);
  for (unsigned i = 0; i < cfg_.workers; ++i) workers.emplace_back([this] { worker_loop(); });
  std::thread poller([this] { poller_loop(); });

  {
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [&] { return live_ == 0 || deadlock_.has_value(); });
    stop_.store(true);
    work_cv_.notify_all();
  }
  for (auto& w : workers) w.join();
  poller.join();

  std::lock_guard lk(mu_);
  RunStats stats;
  stats.elapsed = Nanos{last_complete_ - start};
  stats.tasks_executed = executed_ - executed_before;
  return stats;
}

void RuntimeImpl::worker_loop() {
  std::unique_lock lk(mu_);
  for (;;) {
    work_cv_.wait(lk, [&] { return stop_.load() || !ready_.empty(); });
    if (stop_.load()) return;
    Task* t = ready_.front();
    ready_.pop_front();
    ++busy_;
    t->state = TaskState::running;
    trace_locked(t->started ? TraceEvent::resume : TraceEvent::start, raw(t->id));
    t->started = true;
    lk.unlock();

    run_slice(*t);
    handle_yield(*t);

    lk.lock();
    if (live_ > 0 && ready_.empty() && busy_ == 0 && !has_wake_source_locked() && !deadlock_) {
      deadlock_ = Error(Errc::deadlock, "no runnable task and no wake source:" +
                                            stuck_report_locked());
      done_cv_.notify_all();
    }
  }
}

void RuntimeImpl::poller_loop() {
  while (!stop_.load()) {
    std::this_thread::sleep_for(cfg_.poll_period);
    if (stop_.load()) break;
    poll_round();
  }
}

// ---------------------------------------------------------------------------

Runtime::Runtime(RuntimeConfig config) : impl_(std::make_unique<RuntimeImpl>(config)) {}
Runtime::~Runtime() = default;

const RuntimeConfig& Runtime::config() const noexcept { return impl_->cfg_; }
ResourceId Runtime::register_resource() { return impl_->register_resource(); }
TaskId Runtime::spawn(std::function<void()> body, std::span<const ResourceId> reads,
                      std::span<const ResourceId> writes) {
  return impl_->spawn(std::move(body), reads, writes);
}
RunStats Runtime::run_to_completion() { return impl_->run_to_completion(); }
bool Runtime::running() const noexcept { return impl_->running_.load(); }
void Runtime::pause_current_task(std::function<void(ResumeHandle)> on_paused) {
  impl_->pause_current_task(std::move(on_paused));
}
void Runtime::resume_task(ResumeHandle handle) { impl_->resume_task(handle); }
void Runtime::increase_event_counter(TaskId task, std::uint32_t n) {
  impl_->increase_event_counter(task, n);
}
void Runtime::decrease_event_counter(TaskId task, std::uint32_t n) {
  impl_->decrease_event_counter(task, n);
}
ServiceId Runtime::register_polling_service(PollingService service) {
  return impl_->register_polling_service(std::move(service));
}
void Runtime::unregister_polling_service(ServiceId id) { impl_->unregister_polling_service(id); }
TaskId Runtime::current_task() const { return impl_->current_task(); }
bool Runtime::in_task() const noexcept { return impl_->in_task(); }
void Runtime::busy_wait(Nanos d) { impl_->busy_wait(d); }
Clock& Runtime::clock() noexcept { return impl_->clock_; }
void Runtime::shutdown() { impl_->shutdown(); }
TaskState Runtime::state(TaskId task) const { return impl_->state(task); }
std::uint64_t Runtime::event_count(TaskId task) const { return impl_->event_count(task); }
std::size_t Runtime::task_count() const { return impl_->task_count(); }
std::size_t Runtime::live_contexts() const { return impl_->live_contexts(); }
std::size_t Runtime::paused_tasks() const { return impl_->paused_tasks(); }
std::vector<TraceRecord> Runtime::trace() const { return impl_->trace(); }

}  // namespace tasio::rt
