#include "tasio/sweep/speedup.hpp"

#include <map>
#include <tuple>

namespace tasio::sweep {

double speedup_percent(double t_baseline, double t_variant) {
  return 100.0 * (t_baseline / t_variant - 1.0);
}

std::vector<SpeedupCell> compute_speedup(const std::vector<SweepRecord>& rows, tiom::Api baseline,
                                         tiom::Api variant) {
  using Key = std::tuple<tiom::Mode, tiom::Pattern, unsigned, double, std::uint64_t>;
  std::map<Key, std::pair<std::vector<double>, std::vector<double>>> cells;
  for (const SweepRecord& r : rows) {
    if (r.api != baseline && r.api != variant) continue;
    auto& [base, var] = cells[Key{r.mode, r.pattern, r.max_parallel, r.compute_ms, r.block_kib}];
    if (r.elapsed_s <= 0.0) continue;
    (r.api == baseline ? base : var).push_back(r.elapsed_s);
  }

  std::vector<SpeedupCell> out;
  for (const auto& [key, times] : cells) {
    SpeedupCell c;
    std::tie(c.mode, c.pattern, c.max_parallel, c.compute_ms, c.block_kib) = key;
    if (!times.first.empty()) c.baseline_s = median(times.first);
    if (!times.second.empty()) c.variant_s = median(times.second);
    if (c.baseline_s && c.variant_s) c.speedup_percent = speedup_percent(*c.baseline_s, *c.variant_s);
    out.push_back(c);
  }
  return out;
}

}  // namespace tasio::sweep
