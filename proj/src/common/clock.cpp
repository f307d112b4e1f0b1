#include "tasio/common/clock.hpp"

#include <thread>

namespace tasio {

SteadyClock::SteadyClock() : epoch_(std::chrono::steady_clock::now()) {}

Nanos SteadyClock::now() const {
  return std::chrono::duration_cast<Nanos>(std::chrono::steady_clock::now() - epoch_);
}

void SteadyClock::sleep_until(Nanos t) {
  std::this_thread::sleep_until(epoch_ + t);
}

void ManualClock::sleep_until(Nanos t) {
  std::int64_t cur = now_.load(std::memory_order_acquire);
  while (cur < t.count() &&
         !now_.compare_exchange_weak(cur, t.count(), std::memory_order_acq_rel)) {
  }
}

}  // namespace tasio
