#pragma once

#include <atomic>
#include <mutex>

#include "tasio/common/clock.hpp"

namespace tasio::rt::detail {

/// Calibrated spin loop for real-clock compute. Calibrated once per process
/// over 100 ms of thread CPU time; each spin of at least 1 ms is re-measured
/// and the rate is corrected when it drifts by more than 5%.
class BusyLoop {
 public:
  static BusyLoop& instance();

  void ensure_calibrated();
  void spin(Nanos d);
  double iterations_per_ns() const noexcept { return rate_.load(std::memory_order_relaxed); }

 private:
  BusyLoop() = default;
  void calibrate();

  std::once_flag once_;
  std::atomic<double> rate_{0.0};
};

}  // namespace tasio::rt::detail
