#pragma once

// Trace replay checks shared by the unit and acceptance suites. They only look
// at the recorded event log and at dependency information rebuilt here from
// the declared read/write sets, never at runtime internals.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tasio/runtime/trace.hpp"

namespace check {

using tasio::rt::TraceEvent;
using tasio::rt::TraceRecord;

struct Access {
  std::vector<std::uint64_t> reads;
  std::vector<std::uint64_t> writes;
};

// Brute force: task j must follow an earlier task i whenever j writes
// something i touches, or j reads something i writes. Index k is task id k+1.
inline std::vector<std::vector<std::uint64_t>> conflict_preds(const std::vector<Access>& tasks) {
  auto has = [](const std::vector<std::uint64_t>& v, std::uint64_t r) {
    return std::find(v.begin(), v.end(), r) != v.end();
  };
  std::vector<std::vector<std::uint64_t>> preds(tasks.size());
  for (std::size_t j = 0; j < tasks.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      bool conflict = false;
      for (auto r : tasks[j].writes) conflict |= has(tasks[i].reads, r) || has(tasks[i].writes, r);
      for (auto r : tasks[j].reads) conflict |= has(tasks[i].writes, r);
      if (conflict) preds[j].push_back(i + 1);
    }
  }
  return preds;
}

// Position of the first `e` event for every id.
inline std::map<std::uint64_t, std::size_t> first_index(const std::vector<TraceRecord>& t, TraceEvent e) {
  std::map<std::uint64_t, std::size_t> at;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i].event == e) at.emplace(t[i].id, i);
  }
  return at;
}

// No task starts before every predecessor completed.
inline std::vector<std::string> dependency_safety(const std::vector<TraceRecord>& t,
                                                  const std::vector<std::vector<std::uint64_t>>& preds) {
  std::vector<std::string> bad;
  const auto start = first_index(t, TraceEvent::start);
  const auto done = first_index(t, TraceEvent::complete);
  for (std::size_t j = 0; j < preds.size(); ++j) {
    const std::uint64_t id = j + 1;
    if (!start.count(id)) {
      bad.push_back("task " + std::to_string(id) + " never started");
      continue;
    }
    for (std::uint64_t p : preds[j]) {
      if (!done.count(p) || done.at(p) > start.at(id)) {
        bad.push_back("task " + std::to_string(id) + " started before " + std::to_string(p) + " completed");
      }
      if (done.count(p) && start.count(id) && t[done.at(p)].time_ns > t[start.at(id)].time_ns) {
        bad.push_back("task " + std::to_string(id) + " start time precedes completion of " + std::to_string(p));
      }
    }
  }
  return bad;
}

// Every task: one spawn, start, body_end and complete, in that order; every
// pause is matched by exactly one resume before the body ends.
inline std::vector<std::string> lifecycle(const std::vector<TraceRecord>& t) {
  struct Seen {
    int spawn = 0, start = 0, body_end = 0, complete = 0, pause = 0, resume = 0;
    bool ordered = true;
    int last = -1;
  };
  std::map<std::uint64_t, Seen> s;
  auto rank = [](TraceEvent e) {
    switch (e) {
      case TraceEvent::spawn: return 0;
      case TraceEvent::start: return 1;
      case TraceEvent::body_end: return 3;
      case TraceEvent::complete: return 4;
      default: return 2;
    }
  };
  for (const auto& r : t) {
    if (r.event == TraceEvent::poll || r.event == TraceEvent::ready) continue;
    Seen& x = s[r.id];
    const int k = rank(r.event);
    if (k < x.last) x.ordered = false;
    x.last = std::max(x.last, k);
    switch (r.event) {
      case TraceEvent::spawn: ++x.spawn; break;
      case TraceEvent::start: ++x.start; break;
      case TraceEvent::body_end: ++x.body_end; break;
      case TraceEvent::complete: ++x.complete; break;
      case TraceEvent::pause:
        ++x.pause;
        if (x.pause != x.resume + 1) x.ordered = false;
        break;
      case TraceEvent::resume:
        ++x.resume;
        if (x.resume != x.pause) x.ordered = false;
        break;
      default: break;
    }
  }
  std::vector<std::string> bad;
  for (const auto& [id, x] : s) {
    if (x.spawn != 1 || x.start != 1 || x.body_end != 1 || x.complete != 1 || x.pause != x.resume || !x.ordered) {
      bad.push_back("task " + std::to_string(id) + " has a malformed lifecycle");
    }
  }
  return bad;
}

// Virtual time only: after all events of an instant, a queued ready task
// implies every agent is busy.
inline std::vector<std::string> no_idle_with_work(const std::vector<TraceRecord>& t, unsigned workers) {
  std::vector<std::string> bad;
  long queued = 0, busy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    switch (t[i].event) {
      case TraceEvent::ready: ++queued; break;
      case TraceEvent::start:
      case TraceEvent::resume: --queued; ++busy; break;
      case TraceEvent::pause:
      case TraceEvent::body_end: --busy; break;
      default: break;
    }
    const bool last_of_instant = i + 1 == t.size() || t[i + 1].time_ns != t[i].time_ns;
    if (last_of_instant && queued > 0 && busy < static_cast<long>(workers)) {
      bad.push_back("idle agent with " + std::to_string(queued) + " ready task(s) at t=" +
                    std::to_string(t[i].time_ns));
    }
  }
  return bad;
}

// While some task is paused or waiting on events, no gap between polling
// rounds exceeds `max_gap_ns`.
inline std::vector<std::string> polling_liveness(const std::vector<TraceRecord>& t, std::int64_t max_gap_ns) {
  std::vector<std::string> bad;
  std::set<std::uint64_t> waiting;  // paused, or body ended but not complete
  std::int64_t last_poll = -1;
  std::int64_t waiting_since = 0;
  for (const auto& r : t) {
    const bool was_waiting = !waiting.empty();
    if (was_waiting) {
      const std::int64_t ref = std::max(last_poll, waiting_since);
      if (r.time_ns - ref > max_gap_ns) {
        bad.push_back("polling gap of " + std::to_string(r.time_ns - ref) + " ns at t=" + std::to_string(r.time_ns));
      }
    }
    switch (r.event) {
      case TraceEvent::poll: last_poll = r.time_ns; break;
      case TraceEvent::pause:
      case TraceEvent::body_end: waiting.insert(r.id); break;
      case TraceEvent::resume:
      case TraceEvent::complete: waiting.erase(r.id); break;
      default: break;
    }
    if (!was_waiting && !waiting.empty()) waiting_since = r.time_ns;
  }
  return bad;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += x + "; ";
  return s;
}

}  // namespace check
