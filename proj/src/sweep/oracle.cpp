#include "tasio/sweep/oracle.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <queue>

#include "tasio/common/error.hpp"

namespace tasio::sweep {

OracleGraph oracle_graph(const tiom::TaskGraph& graph, const tiom::TiomConfig& config) {
  OracleGraph g;
  g.tasks.reserve(graph.tasks.size());
  const io::IoKind kind = tiom::is_write(config.pattern) ? io::IoKind::write : io::IoKind::read;
  for (const tiom::TaskSpec& t : graph.tasks) {
    OracleTask o;
    o.compute = t.compute;
    if (t.io_index != tiom::kNoBlock) o.io_bytes = graph.slices[t.io_index].length;
    o.io_kind = kind;
    o.preds = t.preds;
    g.tasks.push_back(std::move(o));
  }
  return g;
}

namespace {

constexpr double kNever = std::numeric_limits<double>::infinity();

// Shared-rate device: up to `depth` jobs split the bandwidth evenly, the rest
// wait in arrival order.
class Device {
 public:
  explicit Device(const io::DeviceModel& m) : m_(m) {}

  void arrive(double now, std::uint32_t task, io::IoKind kind, std::uint64_t bytes) {
    settle(now);
    const double bw = (kind == io::IoKind::read ? m_.read_bw_mib_s : m_.write_bw_mib_s) *
                      (kind == io::IoKind::write ? m_.degradation(bytes) : 1.0);
    Job j{task, static_cast<double>(bytes), bw * 1048576.0 / 1e9};
    if (serving_.size() < m_.max_depth) {
      serving_.push_back(j);
    } else {
      backlog_.push_back(j);
    }
  }

  double next_done() const {
    double best = kNever;
    for (const Job& j : serving_) best = std::min(best, clock_ + j.left / share(j));
    return best;
  }

  // Advances to `t` (which must not pass next_done()) and returns the tasks
  // whose transfer ends exactly there.
  std::vector<std::uint32_t> finish_at(double t) {
    std::vector<std::uint32_t> done;
    std::vector<Job> keep;
    for (const Job& j : serving_) {
      const double end = clock_ + j.left / share(j);
      if (end <= t + 1e-6) {
        done.push_back(j.task);
      } else {
        Job k = j;
        k.left -= share(j) * (t - clock_);
        keep.push_back(k);
      }
    }
    serving_ = std::move(keep);
    clock_ = t;
    while (serving_.size() < m_.max_depth && !backlog_.empty()) {
      serving_.push_back(backlog_.front());
      backlog_.pop_front();
    }
    return done;
  }

 private:
  struct Job {
    std::uint32_t task;
    double left;   // bytes
    double rate;   // bytes/ns alone on the device
  };

  double share(const Job& j) const { return j.rate / static_cast<double>(serving_.size()); }

  void settle(double t) {
    if (t <= clock_) return;
    const double n = static_cast<double>(serving_.size());
    for (Job& j : serving_) j.left -= j.rate / n * (t - clock_);
    clock_ = t;
  }

  const io::DeviceModel& m_;
  double clock_ = 0.0;
  std::vector<Job> serving_;
  std::deque<Job> backlog_;
};

enum class Step : std::uint8_t { start, after_suspend, after_io };

struct Timed {
  double at;
  std::uint64_t seq;
  std::uint32_t task;
  int what;  // 0 agent segment ends, 1 suspension ends, 2 I/O reaches the device
  bool operator>(const Timed& o) const { return at != o.at ? at > o.at : seq > o.seq; }
};

}  // namespace

Nanos oracle_makespan(const OracleGraph& graph, unsigned workers, const io::DeviceModel& model,
                      tiom::Api api) {
  if (workers == 0) throw Error(Errc::bad_argument, "oracle needs at least one worker");
  const std::size_t n = graph.tasks.size();
  std::vector<std::uint32_t> waiting_on(n, 0);
  std::vector<std::vector<std::uint32_t>> succ(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t p : graph.tasks[i].preds) {
      if (p >= n) throw Error(Errc::bad_argument, "predecessor out of range");
      succ[p].push_back(i);
      ++waiting_on[i];
    }
  }

  Device device(model);
  std::priority_queue<Timed, std::vector<Timed>, std::greater<>> timeline;
  std::uint64_t seq = 0;
  std::deque<std::pair<std::uint32_t, Step>> ready;
  std::vector<bool> holds_agent(n, false);
  unsigned free_agents = workers;
  std::size_t finished = 0;
  double now = 0.0;
  double makespan = 0.0;

  auto complete = [&](std::uint32_t t) {
    ++finished;
    makespan = std::max(makespan, now);
    for (std::uint32_t s : succ[t]) {
      if (--waiting_on[s] == 0) ready.emplace_back(s, Step::start);
    }
  };
  auto release_agent = [&](std::uint32_t t) {
    if (holds_agent[t]) {
      holds_agent[t] = false;
      ++free_agents;
    }
  };
  auto start_io = [&](std::uint32_t t) {
    if (api != tiom::Api::standalone) release_agent(t);
    timeline.push(Timed{now + static_cast<double>(model.base_latency.count()), seq++, t, 2});
  };
  // Called when the agent-held part of a task's body reaches `step`.
  auto proceed = [&](std::uint32_t t, Step step) {
    const OracleTask& task = graph.tasks[t];
    if (step == Step::start && task.suspend.count() > 0) {
      release_agent(t);
      timeline.push(Timed{now + static_cast<double>(task.suspend.count()), seq++, t, 1});
      return;
    }
    if (step != Step::after_io && task.io_bytes > 0) {
      start_io(t);
      return;
    }
    release_agent(t);
    complete(t);
  };

  for (std::uint32_t i = 0; i < n; ++i) {
    if (waiting_on[i] == 0) ready.emplace_back(i, Step::start);
  }

  for (;;) {
    while (free_agents > 0 && !ready.empty()) {
      auto [t, step] = ready.front();
      ready.pop_front();
      --free_agents;
      holds_agent[t] = true;
      if (step == Step::start) {
        timeline.push(Timed{now + static_cast<double>(graph.tasks[t].compute.count()), seq++, t, 0});
      } else {
        proceed(t, step);
      }
    }
    const double t_dev = device.next_done();
    const double t_line = timeline.empty() ? kNever : timeline.top().at;
    if (t_dev == kNever && t_line == kNever) break;
    if (t_dev <= t_line) {
      now = t_dev;
      for (std::uint32_t t : device.finish_at(t_dev)) {
        if (api == tiom::Api::blocking) {
          ready.emplace_back(t, Step::after_io);
        } else {
          release_agent(t);
          complete(t);
        }
      }
      continue;
    }
    const Timed ev = timeline.top();
    timeline.pop();
    now = ev.at;
    switch (ev.what) {
      case 0:
        proceed(ev.task, Step::start);
        break;
      case 1:
        ready.emplace_back(ev.task, Step::after_suspend);
        break;
      default:
        device.arrive(now, ev.task, graph.tasks[ev.task].io_kind, graph.tasks[ev.task].io_bytes);
        break;
    }
  }

  if (finished != n) {
    throw Error(Errc::cyclic_graph, std::to_string(n - finished) + " task(s) can never run");
  }
  return Nanos{static_cast<std::int64_t>(std::llround(makespan))};
}

Nanos oracle_makespan(const tiom::TiomConfig& config, unsigned workers, const io::DeviceModel& model) {
  return oracle_makespan(oracle_graph(tiom::build_task_graph(config), config), workers, model,
                         config.api);
}

}  // namespace tasio::sweep
