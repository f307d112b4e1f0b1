#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tasio/common/clock.hpp"
#include "tasio/io/request.hpp"

namespace tasio::io {

/// Parametric throughput/latency model of a storage device.
///
/// Up to `max_depth` requests are serviced at once and share the rated
/// bandwidth evenly; later requests queue in arrival order. Every request
/// first spends `base_latency` before it reaches the device. Writes are
/// additionally scaled by `write_degradation`, a piecewise-linear multiplier
/// over the request size (KiB) that is clamped at both ends.
struct DeviceModel {
  double read_bw_mib_s = 0.0;
  double write_bw_mib_s = 0.0;
  Nanos base_latency{0};
  unsigned max_depth = 1;
  std::vector<std::pair<std::uint64_t, double>> write_degradation;  // (size KiB, multiplier)

  void validate() const;

  double degradation(std::uint64_t bytes) const;
  /// Full-device rate for one request of this kind and size, in bytes per ns.
  double rate_bytes_per_ns(IoKind kind, std::uint64_t bytes) const;
  double rated_bw_mib_s(IoKind kind) const {
    return kind == IoKind::read ? read_bw_mib_s : write_bw_mib_s;
  }

  /// Calibrated from the 905P profile: 1 MiB random reads at 2548 MiB/s,
  /// 4 KiB random writes at 2255 MiB/s, four requests in flight. Writes keep
  /// full speed up to 1 MiB and fall linearly to 60% at 8 MiB.
  static DeviceModel optane_905p();

  static DeviceModel parse(std::string_view text);
  static DeviceModel load(const std::filesystem::path& path);
  std::string to_text() const;
};

/// Completion delay of a request of `bytes` submitted while `depth` equally
/// sized requests (itself included) are active: base latency plus the
/// transfer at a 1/depth share of the device rate.
Nanos simulated_completion_time(const DeviceModel& model, IoKind kind, std::uint64_t bytes,
                                unsigned depth);

}  // namespace tasio::io
