#pragma once

#include <cstdint>
#include <vector>

#include "tasio/io/device_model.hpp"
#include "tasio/tiom/config.hpp"
#include "tasio/tiom/graph.hpp"

namespace tasio::sweep {

/// One task as the oracle sees it: compute, then an optional suspension that
/// frees the agent, then an optional I/O.
struct OracleTask {
  Nanos compute{0};
  Nanos suspend{0};
  std::uint64_t io_bytes = 0;
  io::IoKind io_kind = io::IoKind::read;
  std::vector<std::uint32_t> preds;
};

struct OracleGraph {
  std::vector<OracleTask> tasks;
};

OracleGraph oracle_graph(const tiom::TaskGraph& graph, const tiom::TiomConfig& config);

/// Makespan of `graph` on `workers` agents sharing one device.
///
/// Agents take ready tasks in FIFO order; tasks released together enter in
/// index order. Standalone I/O keeps the agent until the device finishes.
/// Blocking-API I/O frees the agent and the task needs an agent again (for no
/// time) once the device finishes. Non-blocking I/O ends the body at
/// submission and completes the task when the device finishes. Throws
/// `Errc::cyclic_graph` when some task can never run.
Nanos oracle_makespan(const OracleGraph& graph, unsigned workers, const io::DeviceModel& model,
                      tiom::Api api);

Nanos oracle_makespan(const tiom::TiomConfig& config, unsigned workers, const io::DeviceModel& model);

}  // namespace tasio::sweep
