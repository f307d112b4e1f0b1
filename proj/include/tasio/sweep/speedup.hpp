#pragma once

#include <optional>
#include <vector>

#include "tasio/sweep/sweep.hpp"

namespace tasio::sweep {

struct SpeedupCell {
  tiom::Mode mode = tiom::Mode::mix;
  tiom::Pattern pattern = tiom::Pattern::seq_read;
  unsigned max_parallel = 0;
  double compute_ms = 0.0;
  std::uint64_t block_kib = 0;
  std::optional<double> baseline_s;  // median elapsed
  std::optional<double> variant_s;
  /// 100 x (baseline / variant - 1); absent when either side is missing.
  std::optional<double> speedup_percent;
};

/// One cell per (mode, pattern, max_parallel, compute, block) that appears in
/// `rows` for either api, in ascending key order. Rows of failed runs
/// (elapsed 0) are ignored.
std::vector<SpeedupCell> compute_speedup(const std::vector<SweepRecord>& rows, tiom::Api baseline,
                                         tiom::Api variant);

double speedup_percent(double t_baseline, double t_variant);

}  // namespace tasio::sweep
