#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "tasio/io/device_model.hpp"
#include "tasio/io/request.hpp"

namespace tasio::io {

/// Event-driven shared-rate server for a `DeviceModel`.
///
/// State only changes at arrivals and completions, so the completion times of
/// a given submission trace do not depend on how often the device is queried.
/// Completion timestamps are rounded up to whole nanoseconds, which keeps the
/// delivered throughput at or below the rated bandwidth.
class SimulatedDevice {
 public:
  explicit SimulatedDevice(DeviceModel model);

  const DeviceModel& model() const noexcept { return model_; }

  /// `bytes` is what the request actually transfers (short at end of file).
  void submit(RequestId id, IoKind kind, std::uint64_t bytes, std::int64_t result, Nanos now);

  /// Processes every arrival and completion up to `now`; finished requests are
  /// appended to `out` in completion order.
  void advance(Nanos now, std::vector<CompletionRecord>& out);

  /// Earliest instant at which the device state can change, assuming no new
  /// submissions.
  std::optional<Nanos> next_event() const;

  /// Completion time of `id` if nothing else is submitted. New submissions can
  /// only delay it, so this is a lower bound.
  std::optional<Nanos> estimate_completion(RequestId id) const;

  std::size_t in_service() const noexcept { return active_.size(); }
  std::size_t queued() const noexcept { return waiting_.size() + arriving_.size(); }
  std::size_t pending() const noexcept { return in_service() + queued(); }

 private:
  struct Job {
    RequestId id{0};
    double remaining = 0.0;  // bytes
    double rate = 0.0;       // bytes/ns with the whole device
    std::int64_t result = 0;
  };
  struct Arrival {
    std::int64_t time;
    Job job;
  };

  void progress_to(double t);
  void admit(Job job);
  double next_completion_time() const;
  void step(double limit, std::vector<CompletionRecord>& out);

  DeviceModel model_;
  double time_ = 0.0;
  std::vector<Job> active_;
  std::deque<Job> waiting_;
  std::deque<Arrival> arriving_;
  std::vector<CompletionRecord> early_;  // finished while processing a submit
};

}  // namespace tasio::io
