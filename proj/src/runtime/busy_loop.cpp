#include "busy_loop.hpp"

#include <time.h>

#include <cmath>
#include <cstdint>

namespace tasio::rt::detail {

namespace {

std::int64_t thread_cpu_ns() {
  timespec ts{};
  clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
  return std::int64_t{ts.tv_sec} * 1'000'000'000 + ts.tv_nsec;
}

void burn(std::uint64_t iterations) {
  volatile std::uint64_t sink = 0;
  for (std::uint64_t i = 0; i < iterations; ++i) sink = sink + i;
}

constexpr std::int64_t kCalibrationNs = 100'000'000;
constexpr double kDriftTolerance = 0.05;

}  // namespace

BusyLoop& BusyLoop::instance() {
  static BusyLoop loop;
  return loop;
}

void BusyLoop::ensure_calibrated() {
  std::call_once(once_, [this] { calibrate(); });
}

void BusyLoop::calibrate() {
  constexpr std::uint64_t chunk = 1 << 16;
  std::uint64_t total = 0;
  const std::int64_t t0 = thread_cpu_ns();
  std::int64_t t1 = t0;
  while (t1 - t0 < kCalibrationNs) {
    burn(chunk);
    total += chunk;
    t1 = thread_cpu_ns();
  }
  rate_.store(static_cast<double>(total) / static_cast<double>(t1 - t0), std::memory_order_relaxed);
}

void BusyLoop::spin(Nanos d) {
  if (d.count() <= 0) return;
  ensure_calibrated();
  const double rate = rate_.load(std::memory_order_relaxed);
  const auto iterations = static_cast<std::uint64_t>(rate * static_cast<double>(d.count()));
  const std::int64_t t0 = thread_cpu_ns();
  burn(iterations);
  const std::int64_t spent = thread_cpu_ns() - t0;
  if (d >= std::chrono::milliseconds(1) && spent > 0) {
    const double ratio = static_cast<double>(spent) / static_cast<double>(d.count());
    if (std::abs(ratio - 1.0) > kDriftTolerance) {
      rate_.store(static_cast<double>(iterations) / static_cast<double>(spent),
                  std::memory_order_relaxed);
    }
  }
}

}  // namespace tasio::rt::detail
