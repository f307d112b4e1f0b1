#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tasio/tiom/benchmark.hpp"
#include "tasio/tiom/config.hpp"

namespace tasio::sweep {

/// Axes of a parameter sweep; every combination runs `reps` times.
struct SweepGrid {
  std::vector<double> compute_ms;
  std::vector<std::uint64_t> block_kib;
  std::vector<tiom::Pattern> patterns;
  std::vector<tiom::Mode> modes;
  std::vector<tiom::Api> apis;
  std::vector<unsigned> max_parallel;
  unsigned reps = 1;
  std::uint64_t file_size = 64 * tiom::MiB;
  Nanos time_limit = std::chrono::seconds(60);
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t cell_count() const noexcept;

  /// compute {1..128} ms x block {4 KiB..8 MiB}, powers of two.
  static SweepGrid full_axes();
  /// compute {1,4,16,64} ms x block {4,64,1024,8192} KiB.
  static SweepGrid desk_axes();
};

/// One CSV row: the configuration projection plus the measured outcome.
struct SweepRecord {
  tiom::Mode mode = tiom::Mode::mix;
  tiom::Api api = tiom::Api::standalone;
  tiom::Pattern pattern = tiom::Pattern::seq_read;
  std::uint64_t block_kib = 0;
  double compute_ms = 0.0;
  unsigned max_parallel = 0;
  unsigned rep = 0;
  double elapsed_s = 0.0;
  std::uint64_t bytes = 0;
  double bandwidth_mibs = 0.0;
  bool completed = false;
};

std::string_view csv_header() noexcept;
std::string to_csv(const SweepRecord& r);
SweepRecord parse_csv_row(std::string_view line);
std::vector<SweepRecord> read_csv(std::istream& in);
std::vector<SweepRecord> read_csv(const std::filesystem::path& path);

SweepRecord make_record(const tiom::TiomConfig& config, unsigned rep, const tiom::BenchResult& r);

/// Runs one benchmark; swapped out by tests.
using BenchFn = std::function<tiom::BenchResult(const tiom::TiomConfig&)>;

/// Runs every grid cell and rep in order, appending rows to `out` (a header is
/// written first when the file is new or empty). Failing cells produce a row
/// with `completed` = false and the sweep moves on. Returns the rows written.
std::size_t run_sweep(const SweepGrid& grid, const BenchFn& bench, const std::filesystem::path& out,
                      std::ostream* log = nullptr);
std::size_t run_sweep(const SweepGrid& grid, const tiom::Platform& platform,
                      const std::filesystem::path& out, std::ostream* log = nullptr);

/// Median of `values` (mean of the middle pair for even counts).
double median(std::vector<double> values);

/// Shortest round-trip decimal text of `v`.
std::string format_number(double v);

}  // namespace tasio::sweep
