#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tasio/io/device_model.hpp"
#include "tasio/io/io_context.hpp"
#include "tasio/runtime/runtime.hpp"
#include "tasio/task_aware_io.hpp"
#include "tasio/tiom/config.hpp"
#include "tasio/tiom/graph.hpp"

namespace tasio::tiom {

struct BenchResult {
  Nanos elapsed{0};
  std::uint64_t bytes = 0;
  double bandwidth_mib_s = 0.0;
  std::size_t tasks_executed = 0;
  bool completed_fully = true;
  /// Per I/O task (in I/O-task order): bytes transferred or a negated errno.
  /// Filled only when requested.
  std::vector<std::int64_t> call_results;
  /// Content digest of the benchmark file after the run (real files only).
  std::uint64_t file_digest = 0;

  double elapsed_s() const noexcept { return static_cast<double>(elapsed.count()) / 1e9; }
};

/// Busy-waits for `d` on the calling agent.
void compute_kernel(rt::Runtime& runtime, Nanos d);

/// Seeded contents of block `block` for write patterns.
void fill_block(std::byte* data, std::size_t length, std::uint64_t seed, std::uint64_t block);

struct BenchTargets {
  io::FileHandle file;
  TaskAwareIo* tasio = nullptr;          // bq / nb
  io::IoContext* standalone = nullptr;   // standalone over the simulated device
  bool record_calls = false;
};

/// Spawns the graph of `config` on `runtime` and runs it. Standalone I/O on a
/// real file is a plain synchronous call in the task body; on a simulated
/// file it is a submission to `targets.standalone` followed by a wait, which
/// keeps the agent occupied just the same.
BenchResult run_benchmark(const TiomConfig& config, rt::Runtime& runtime, const BenchTargets& targets);

/// Where and how a benchmark runs.
struct Platform {
  rt::ClockMode clock = rt::ClockMode::virtual_time;
  unsigned workers = 56;
  io::Backend backend = io::Backend::simulated;
  io::DeviceModel model = io::DeviceModel::optane_905p();
  Nanos poll_period = std::chrono::microseconds(100);
  std::size_t max_in_flight = 1000;
  Nanos retry_sleep = std::chrono::milliseconds(1);
  unsigned pool_workers = 4;
  bool read_env = true;
  /// Real file used by the pool backend; empty picks a temporary file.
  std::filesystem::path file_path;
  bool direct = false;
  bool record_calls = false;
  bool digest = false;
  bool trace = false;
};

/// Builds a runtime and the I/O stack described by `platform`, prepares the
/// file and runs one benchmark.
BenchResult run_tiom(const TiomConfig& config, const Platform& platform);

}  // namespace tasio::tiom
