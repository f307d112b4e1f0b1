#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tasio/sweep/speedup.hpp"

namespace tasio::sweep {

/// z over a (compute ms) x (block KiB) grid; `z` is row-major by x.
struct PlotSurface {
  std::string label;
  std::vector<double> xs;
  std::vector<std::uint64_t> ys;
  std::vector<std::optional<double>> z;

  std::optional<double> at(std::size_t xi, std::size_t yi) const { return z[xi * ys.size() + yi]; }
};

/// One surface per (mode, pattern, max_parallel) group of speedup cells.
std::vector<PlotSurface> speedup_surfaces(const std::vector<SpeedupCell>& cells);

/// Median bandwidth of `api` rows, one surface per (mode, pattern,
/// max_parallel) group.
std::vector<PlotSurface> bandwidth_surfaces(const std::vector<SweepRecord>& rows, tiom::Api api);

/// Writes gnuplot data (`x y z` lines, a blank line after each x scan row,
/// two blank lines between surfaces, missing values as NaN) to `out`, and a
/// CSV twin `label,compute_ms,block_kib,z` next to it with a .csv extension.
/// Returns the path of the twin.
std::filesystem::path emit_plot_data(const std::vector<PlotSurface>& surfaces,
                                     const std::filesystem::path& out);

}  // namespace tasio::sweep
