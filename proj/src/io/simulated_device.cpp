#include "tasio/io/simulated_device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tasio::io {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Jobs finishing within this many ns of the earliest one complete together.
constexpr double kSimultaneous = 1e-6;
}  // namespace

SimulatedDevice::SimulatedDevice(DeviceModel model) : model_(std::move(model)) { model_.validate(); }

void SimulatedDevice::progress_to(double t) {
  if (t <= time_) return;
  if (!active_.empty()) {
    const double n = static_cast<double>(active_.size());
    for (Job& j : active_) j.remaining -= (j.rate / n) * (t - time_);
  }
  time_ = t;
}

void SimulatedDevice::admit(Job job) {
  if (active_.size() < model_.max_depth) {
    active_.push_back(job);
  } else {
    waiting_.push_back(job);
  }
}

double SimulatedDevice::next_completion_time() const {
  double best = kInf;
  const double n = static_cast<double>(active_.size());
  for (const Job& j : active_) {
    best = std::min(best, time_ + std::max(j.remaining, 0.0) / (j.rate / n));
  }
  return best;
}

void SimulatedDevice::submit(RequestId id, IoKind kind, std::uint64_t bytes, std::int64_t result,
                             Nanos now) {
  Job job{id, static_cast<double>(bytes), model_.rate_bytes_per_ns(kind, std::max<std::uint64_t>(bytes, 1)),
          result};
  const std::int64_t arrival = now.count() + model_.base_latency.count();
  if (arrival > now.count()) {
    arriving_.push_back(Arrival{arrival, job});
    return;
  }
  // Arrival at `now`: bring the server up to date first.
  step(static_cast<double>(now.count()), early_);
  progress_to(static_cast<double>(now.count()));
  admit(job);
}

void SimulatedDevice::step(double limit, std::vector<CompletionRecord>& out) {
  for (;;) {
    const double done_at = next_completion_time();
    const double arrive_at =
        arriving_.empty() ? kInf : static_cast<double>(arriving_.front().time);
    const double t = std::min(done_at, arrive_at);
    if (t == kInf || t > limit) return;

    if (done_at <= arrive_at) {
      const double n = static_cast<double>(active_.size());
      std::vector<Job> finished;
      std::vector<Job> still;
      for (const Job& j : active_) {
        const double finish = time_ + std::max(j.remaining, 0.0) / (j.rate / n);
        (finish <= done_at + kSimultaneous ? finished : still).push_back(j);
      }
      active_ = std::move(still);
      // Survivors progressed at the old share until `done_at`.
      for (Job& j : active_) j.remaining -= (j.rate / n) * (done_at - time_);
      time_ = done_at;
      const auto stamp = Nanos{static_cast<std::int64_t>(std::ceil(done_at - 1e-9))};
      for (const Job& j : finished) out.push_back(CompletionRecord{j.id, j.result, stamp});
      while (active_.size() < model_.max_depth && !waiting_.empty()) {
        active_.push_back(waiting_.front());
        waiting_.pop_front();
      }
    } else {
      progress_to(arrive_at);
      Job job = arriving_.front().job;
      arriving_.pop_front();
      admit(job);
    }
  }
}

void SimulatedDevice::advance(Nanos now, std::vector<CompletionRecord>& out) {
  out.insert(out.end(), early_.begin(), early_.end());
  early_.clear();
  step(static_cast<double>(now.count()), out);
}

std::optional<Nanos> SimulatedDevice::next_event() const {
  double t = next_completion_time();
  for (const auto& rec : early_) t = std::min(t, static_cast<double>(rec.completion_time.count()));
  if (!arriving_.empty()) t = std::min(t, static_cast<double>(arriving_.front().time));
  if (t == kInf) return std::nullopt;
  return Nanos{static_cast<std::int64_t>(std::ceil(t - 1e-9))};
}

std::optional<Nanos> SimulatedDevice::estimate_completion(RequestId id) const {
  for (const auto& rec : early_) {
    if (rec.id == id) return rec.completion_time;
  }
  SimulatedDevice copy = *this;
  std::vector<CompletionRecord> out;
  while (copy.pending() > 0) {
    out.clear();
    copy.step(kInf, out);
    for (const auto& rec : out) {
      if (rec.id == id) return rec.completion_time;
    }
    if (out.empty()) break;
  }
  return std::nullopt;
}

}  // namespace tasio::io
