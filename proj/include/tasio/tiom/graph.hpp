#pragma once

#include <cstdint>
#include <vector>

#include "tasio/tiom/config.hpp"

namespace tasio::tiom {

enum class TaskKind : std::uint8_t {
  compute,  // busy-wait only
  io,       // one block of I/O only
  mixed,    // busy-wait, then one block of I/O
};

inline constexpr std::uint32_t kNoBlock = UINT32_MAX;

struct TaskSpec {
  std::uint32_t id = 0;
  TaskKind kind = TaskKind::compute;
  std::uint32_t series = 0;
  Nanos compute{0};
  std::uint32_t io_index = kNoBlock;  // index into the I/O slice table
  /// Buffer slot within the series (fan-out stages keep up to 4 in flight).
  std::uint32_t slot = 0;
  std::vector<std::uint32_t> preds;
};

struct IoSlice {
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
};

/// Tasks in spawn order; `preds` always point to earlier tasks.
struct TaskGraph {
  std::vector<TaskSpec> tasks;
  std::vector<IoSlice> slices;  // one per I/O-carrying task
  unsigned series = 0;

  std::size_t edge_count() const noexcept;
  std::size_t io_task_count() const noexcept { return slices.size(); }
  std::size_t compute_task_count() const noexcept;
  Nanos total_compute() const noexcept;
};

/// Number of blocks handled by each series: an even split in units of the
/// mode's stage size, earlier series taking the remainder.
std::vector<std::uint64_t> series_blocks(const TiomConfig& config);

/// Offsets of every I/O task, in I/O-task order. Sequential patterns give
/// each series a contiguous run of blocks; random patterns shuffle all
/// blocks with the seed before splitting them among the series.
std::vector<IoSlice> io_offsets(const TiomConfig& config);

TaskGraph build_task_graph(const TiomConfig& config);

}  // namespace tasio::tiom
