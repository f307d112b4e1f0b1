#include "tasio/tiom/graph.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace tasio::tiom {

std::size_t TaskGraph::edge_count() const noexcept {
  std::size_t n = 0;
  for (const TaskSpec& t : tasks) n += t.preds.size();
  return n;
}

std::size_t TaskGraph::compute_task_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(tasks.begin(), tasks.end(), [](const TaskSpec& t) {
    return t.kind != TaskKind::io;
  }));
}

Nanos TaskGraph::total_compute() const noexcept {
  Nanos sum{0};
  for (const TaskSpec& t : tasks) sum += t.compute;
  return sum;
}

std::vector<std::uint64_t> series_blocks(const TiomConfig& cfg) {
  const unsigned series = cfg.series();
  const std::uint64_t units = cfg.blocks() / cfg.stage_blocks();
  std::vector<std::uint64_t> out(series, 0);
  for (unsigned s = 0; s < series; ++s) {
    const std::uint64_t u = units / series + (s < units % series ? 1 : 0);
    out[s] = u * cfg.stage_blocks();
  }
  return out;
}

std::vector<IoSlice> io_offsets(const TiomConfig& cfg) {
  cfg.validate();
  std::vector<std::uint64_t> order(cfg.blocks());
  std::iota(order.begin(), order.end(), 0);
  if (is_random(cfg.pattern)) {
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<IoSlice> out;
  out.reserve(order.size());
  for (const std::uint64_t b : order) out.push_back(IoSlice{b * cfg.block_size, cfg.block_size});
  return out;
}

TaskGraph build_task_graph(const TiomConfig& cfg) {
  TaskGraph g;
  g.slices = io_offsets(cfg);
  const std::vector<std::uint64_t> per_series = series_blocks(cfg);
  g.series = static_cast<unsigned>(per_series.size());

  std::uint32_t next_io = 0;
  auto add = [&](TaskKind kind, std::uint32_t series, Nanos compute, bool io, std::uint32_t slot,
                 std::vector<std::uint32_t> preds) {
    TaskSpec t;
    t.id = static_cast<std::uint32_t>(g.tasks.size());
    t.kind = kind;
    t.series = series;
    t.compute = compute;
    t.io_index = io ? next_io++ : kNoBlock;
    t.slot = slot;
    t.preds = std::move(preds);
    g.tasks.push_back(std::move(t));
    return g.tasks.back().id;
  };

  const Nanos c = cfg.compute_time;
  for (std::uint32_t s = 0; s < g.series; ++s) {
    const std::uint64_t n = per_series[s];
    switch (cfg.mode) {
      case Mode::mix: {
        std::vector<std::uint32_t> prev;
        for (std::uint64_t i = 0; i < n; ++i) prev = {add(TaskKind::mixed, s, c, true, 0, prev)};
        break;
      }
      case Mode::one_to_one: {
        std::vector<std::uint32_t> prev;
        for (std::uint64_t i = 0; i < n; ++i) {
          prev = {add(TaskKind::compute, s, c, false, 0, prev)};
          prev = {add(TaskKind::io, s, Nanos{0}, true, 0, prev)};
        }
        break;
      }
      case Mode::fjio: {
        // Four I/O tasks feed one compute task carrying their combined compute.
        std::vector<std::uint32_t> prev;
        for (std::uint64_t i = 0; i < n; i += 4) {
          std::vector<std::uint32_t> stage;
          for (std::uint32_t k = 0; k < 4; ++k) stage.push_back(add(TaskKind::io, s, Nanos{0}, true, k, prev));
          prev = {add(TaskKind::compute, s, 4 * c, false, 0, stage)};
        }
        break;
      }
      case Mode::fjc: {
        // Four compute tasks feed one I/O task; they split one block's compute.
        std::vector<std::uint32_t> prev;
        for (std::uint64_t i = 0; i < n; ++i) {
          std::vector<std::uint32_t> stage;
          for (std::uint32_t k = 0; k < 4; ++k) stage.push_back(add(TaskKind::compute, s, c / 4, false, k, prev));
          prev = {add(TaskKind::io, s, Nanos{0}, true, 0, stage)};
        }
        break;
      }
    }
  }
  return g;
}

}  // namespace tasio::tiom
