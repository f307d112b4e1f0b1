#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace tasio {

using Nanos = std::chrono::nanoseconds;

/// Time source shared by the runtime and the I/O backends.
///
/// `sleep_until` occupies the caller until the given instant. Under a virtual
/// clock that means the caller's execution agent stays busy while simulated
/// time advances; nothing spins. `notify_at` lets an event source (such as the
/// simulated device) ask for a progress round at a future instant; real clocks
/// ignore it since pollers run on their own period.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual Nanos now() const = 0;
  virtual void sleep_until(Nanos t) = 0;
  virtual void notify_at(Nanos) {}
  virtual bool is_virtual() const noexcept = 0;

  void sleep_for(Nanos d) { sleep_until(now() + d); }
};

/// Monotonic wall clock; zero is the construction instant.
class SteadyClock final : public Clock {
 public:
  SteadyClock();

  Nanos now() const override;
  void sleep_until(Nanos t) override;
  bool is_virtual() const noexcept override { return false; }

 private:
  std::chrono::steady_clock::time_point epoch_;
};

/// Virtual clock advanced only by `sleep_until`. Single-caller use (device
/// profiling, unit tests of the backends).
class ManualClock final : public Clock {
 public:
  Nanos now() const override { return Nanos{now_.load(std::memory_order_acquire)}; }
  void sleep_until(Nanos t) override;
  void advance(Nanos d) { sleep_until(now() + d); }
  bool is_virtual() const noexcept override { return true; }

 private:
  std::atomic<std::int64_t> now_{0};
};

}  // namespace tasio
