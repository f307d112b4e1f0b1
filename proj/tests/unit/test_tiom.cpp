#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "support/trace_check.hpp"
#include "tasio/common/error.hpp"
#include "tasio/tiom/benchmark.hpp"
#include "tasio/tiom/graph.hpp"

using namespace tasio;
using namespace tasio::tiom;
using namespace std::chrono_literals;

namespace {

TiomConfig small(Mode m, std::uint64_t blocks, unsigned max_parallel, std::uint64_t block = 4 * KiB) {
  TiomConfig c;
  c.mode = m;
  c.block_size = block;
  c.file_size = blocks * block;
  c.max_parallel = max_parallel;
  return c;
}

struct Counts {
  std::size_t tasks = 0, edges = 0, io = 0, compute = 0;
  Nanos busy{0};
};

// Closed forms per series: b blocks in the series.
Counts closed_form(const TiomConfig& c, const std::vector<std::uint64_t>& per_series) {
  Counts k;
  const Nanos ct = c.compute_time;
  for (const std::uint64_t b : per_series) {
    if (b == 0) continue;
    switch (c.mode) {
      case Mode::mix:
        k.tasks += b, k.edges += b - 1, k.io += b, k.compute += b;
        break;
      case Mode::one_to_one:
        k.tasks += 2 * b, k.edges += 2 * b - 1, k.io += b, k.compute += b;
        break;
      case Mode::fjio: {
        const std::uint64_t st = b / 4;
        k.tasks += 5 * st, k.edges += 4 * st + 4 * (st - 1), k.io += 4 * st, k.compute += st;
        break;
      }
      case Mode::fjc:
        k.tasks += 5 * b, k.edges += 4 * b + 4 * (b - 1), k.io += b, k.compute += 4 * b;
        break;
    }
    k.busy += ct * static_cast<std::int64_t>(b);
  }
  return k;
}

// Reachability over 0-based predecessor lists.
std::vector<std::set<std::uint32_t>> closure(const std::vector<std::vector<std::uint32_t>>& preds) {
  std::vector<std::set<std::uint32_t>> reach(preds.size());
  for (std::size_t j = 0; j < preds.size(); ++j) {
    for (const auto p : preds[j]) {
      reach[j].insert(p);
      reach[j].insert(reach[p].begin(), reach[p].end());
    }
  }
  return reach;
}

// Declared accesses: one resource per series, fan stages read it, the task
// closing a stage writes it.
std::vector<check::Access> accesses(const TaskGraph& g, Mode m) {
  std::vector<check::Access> out;
  for (const TaskSpec& t : g.tasks) {
    const bool fan = (m == Mode::fjio && t.kind == TaskKind::io) || (m == Mode::fjc && t.kind == TaskKind::compute);
    check::Access a;
    (fan ? a.reads : a.writes).push_back(t.series);
    out.push_back(a);
  }
  return out;
}

}  // namespace

TEST_SUITE("tiom.config") {
  TEST_CASE("names round-trip") {
    for (Mode m : {Mode::mix, Mode::one_to_one, Mode::fjio, Mode::fjc}) CHECK(parse_mode(to_string(m)) == m);
    for (Pattern p : {Pattern::seq_read, Pattern::seq_write, Pattern::rand_read, Pattern::rand_write})
      CHECK(parse_pattern(to_string(p)) == p);
    for (Api a : {Api::standalone, Api::blocking, Api::nonblocking}) CHECK(parse_api(to_string(a)) == a);
    CHECK(to_string(Mode::one_to_one) == "1to1");
    CHECK(to_string(Api::nonblocking) == "nb");
    CHECK_THROWS_AS(parse_mode("zigzag"), Error);
  }

  TEST_CASE("invalid configurations") {
    TiomConfig c;
    c.block_size = 3000;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(Mode::fjio, 6, 128);
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(Mode::fjc, 8, 3);
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(Mode::mix, 8, 1);
    c.compute_time = -1ns;
    CHECK_THROWS_AS(c.validate(), Error);
    c = small(Mode::mix, 8, 1);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("series count") {
    CHECK(small(Mode::mix, 1024, 128).series() == 128);
    CHECK(small(Mode::one_to_one, 1024, 256).series() == 256);
    CHECK(small(Mode::fjio, 1024, 128).series() == 32);
    CHECK(small(Mode::fjc, 1024, 256).series() == 64);
    CHECK(small(Mode::mix, 16, 128).series() == 16);
    CHECK(small(Mode::fjio, 16, 128).series() == 4);
  }
}

TEST_SUITE("tiom.graph") {
  TEST_CASE("fjio, one series, eight blocks") {
    const TaskGraph g = build_task_graph(small(Mode::fjio, 8, 4));
    CHECK(g.series == 1);
    CHECK(g.io_task_count() == 8);
    CHECK(g.compute_task_count() == 2);
    for (const TaskSpec& t : g.tasks) {
      if (t.kind == TaskKind::compute) {
        CHECK(t.preds.size() == 4);
        for (auto p : t.preds) CHECK(g.tasks[p].kind == TaskKind::io);
      } else {
        CHECK(t.preds.size() <= 1);
        for (auto p : t.preds) CHECK(g.tasks[p].kind == TaskKind::compute);
      }
    }
  }

  TEST_CASE("mix, one series, a single chain") {
    const TaskGraph g = build_task_graph(small(Mode::mix, 37, 1));
    CHECK(g.tasks.size() == 37);
    CHECK(g.edge_count() == 36);
    for (std::size_t i = 1; i < g.tasks.size(); ++i) CHECK(g.tasks[i].preds == std::vector<std::uint32_t>{static_cast<std::uint32_t>(i - 1)});
  }

  TEST_CASE("counts match closed forms and dependencies match declared accesses") {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 120; ++trial) {
      const Mode m = static_cast<Mode>(trial % 4);
      const unsigned width = m == Mode::fjio || m == Mode::fjc ? 4 : 1;
      const std::uint64_t stage = m == Mode::fjio ? 4 : 1;
      TiomConfig c = small(m, stage * (1 + rng() % 40), width * (1 + rng() % 12));
      c.compute_time = Nanos{4 * static_cast<std::int64_t>(rng() % 1000)};
      c.pattern = static_cast<Pattern>(rng() % 4);
      const TaskGraph g = build_task_graph(c);

      const Counts k = closed_form(c, series_blocks(c));
      CHECK(g.tasks.size() == k.tasks);
      CHECK(g.edge_count() == k.edges);
      CHECK(g.io_task_count() == k.io);
      CHECK(g.compute_task_count() == k.compute);
      CHECK(g.total_compute() == k.busy);
      CHECK(g.io_task_count() * c.block_size == c.file_size);

      std::vector<std::vector<std::uint32_t>> mine, derived;
      for (const TaskSpec& t : g.tasks) mine.push_back(t.preds);
      for (const auto& p : check::conflict_preds(accesses(g, m))) {
        derived.emplace_back();
        for (auto id : p) derived.back().push_back(static_cast<std::uint32_t>(id - 1));
      }
      CHECK(closure(mine) == closure(derived));
    }
  }

  TEST_CASE("series blocks split evenly") {
    const TiomConfig c = small(Mode::fjio, 4 * 10, 12);  // 3 series, 10 stages
    CHECK(series_blocks(c) == std::vector<std::uint64_t>{16, 12, 12});
    const TiomConfig d = small(Mode::mix, 5, 8);
    CHECK(series_blocks(d) == std::vector<std::uint64_t>{1, 1, 1, 1, 1});
  }
}

TEST_SUITE("tiom.offsets") {
  TEST_CASE("sequential offsets of one series") {
    const auto o = io_offsets(small(Mode::mix, 4, 1));
    REQUIRE(o.size() == 4);
    for (std::uint64_t i = 0; i < 4; ++i) {
      CHECK(o[i].offset == i * 4096);
      CHECK(o[i].length == 4096);
    }
  }

  TEST_CASE("random offsets are reproducible and seed-dependent") {
    TiomConfig c = small(Mode::mix, 256, 8);
    c.pattern = Pattern::rand_write;
    const auto a = io_offsets(c);
    const auto b = io_offsets(c);
    CHECK(std::equal(a.begin(), a.end(), b.begin(), [](auto x, auto y) { return x.offset == y.offset; }));
    c.seed = 2;
    const auto d = io_offsets(c);
    CHECK_FALSE(std::equal(a.begin(), a.end(), d.begin(), [](auto x, auto y) { return x.offset == y.offset; }));
  }

  TEST_CASE("offsets partition the file for every pattern") {
    for (int p = 0; p < 4; ++p) {
      for (Mode m : {Mode::mix, Mode::fjio}) {
        TiomConfig c = small(m, 512, 16, 8 * KiB);
        c.pattern = static_cast<Pattern>(p);
        auto o = io_offsets(c);
        std::sort(o.begin(), o.end(), [](auto x, auto y) { return x.offset < y.offset; });
        std::uint64_t cursor = 0;
        for (const auto& s : o) {
          CHECK(s.offset == cursor);
          cursor += s.length;
        }
        CHECK(cursor == c.file_size);
      }
    }
  }

  TEST_CASE("sequential series get contiguous ranges") {
    const TiomConfig c = small(Mode::mix, 64, 4);
    const TaskGraph g = build_task_graph(c);
    std::vector<std::vector<std::uint64_t>> per(4);
    for (const TaskSpec& t : g.tasks) per[t.series].push_back(g.slices[t.io_index].offset);
    for (const auto& v : per) {
      for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] == v[i - 1] + 4096);
    }
  }
}

TEST_SUITE("tiom.run") {
  Platform virt(unsigned workers) {
    Platform p;
    p.workers = workers;
    p.read_env = false;
    return p;
  }

  TEST_CASE("compute kernel") {
    rt::RuntimeConfig rc;
    rc.clock = rt::ClockMode::virtual_time;
    rt::Runtime v(rc);
    Nanos d0{-1}, d1{-1};
    v.spawn([&] {
      const Nanos t0 = v.clock().now();
      compute_kernel(v, 0ns);
      d0 = v.clock().now() - t0;
      compute_kernel(v, 1ms);
      d1 = v.clock().now() - t0;
    });
    v.run_to_completion();
    CHECK(d0 == 0ns);
    CHECK(d1 == 1ms);

    // Wall clock, best of five so host preemption does not count.
    rt::Runtime real{rt::RuntimeConfig{}};
    double ms = 1e9;
    for (int attempt = 0; attempt < 5; ++attempt) {
      double took = 0;
      real.spawn([&] {
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < 10; ++i) compute_kernel(real, 1ms);
        took = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      });
      real.run_to_completion();
      ms = std::min(ms, took);
    }
    CHECK(ms == doctest::Approx(10.0).epsilon(0.05));
  }

  TEST_CASE("standalone serial law") {
    TiomConfig c = small(Mode::mix, 16, 1, 64 * KiB);
    const BenchResult r = run_tiom(c, virt(1));
    // 64 KiB at 2548 MiB/s, stamped on whole nanoseconds.
    const auto io = static_cast<std::int64_t>(std::ceil(65536.0 * 1e9 / (2548.0 * 1048576.0)));
    CHECK(r.elapsed == 16 * (1ms + Nanos{io}));
    CHECK(r.bytes == c.file_size);
    CHECK(r.completed_fully);
    CHECK(r.tasks_executed == 16);
    CHECK(r.bandwidth_mib_s == doctest::Approx(1.0 / r.elapsed_s()));
  }

  TEST_CASE("non-blocking overlaps with two or more series") {
    TiomConfig c = small(Mode::mix, 16, 2, 64 * KiB);
    const BenchResult base = run_tiom(c, virt(1));
    c.api = Api::nonblocking;
    const BenchResult nb = run_tiom(c, virt(1));
    CHECK(nb.elapsed < base.elapsed);
  }

  TEST_CASE("every mode and api processes the whole file") {
    for (Mode m : {Mode::mix, Mode::one_to_one, Mode::fjio, Mode::fjc}) {
      for (Api a : {Api::standalone, Api::blocking, Api::nonblocking}) {
        for (Pattern p : {Pattern::seq_read, Pattern::rand_write}) {
          TiomConfig c = small(m, 64, 16, 16 * KiB);
          c.api = a;
          c.pattern = p;
          c.compute_time = 200us;
          const BenchResult r = run_tiom(c, virt(4));
          CAPTURE(c.describe());
          CHECK(r.completed_fully);
          CHECK(r.bytes == c.file_size);
          CHECK(r.tasks_executed == build_task_graph(c).tasks.size());
        }
      }
    }
  }

  TEST_CASE("time limit cuts the run short") {
    TiomConfig c = small(Mode::mix, 4096, 4, 64 * KiB);
    c.time_limit = 1ms;
    const BenchResult r = run_tiom(c, virt(4));
    CHECK_FALSE(r.completed_fully);
    CHECK(r.bytes < c.file_size);
    CHECK(r.bytes % c.block_size == 0);
  }

  TEST_CASE("virtual clock with the pool backend is rejected") {
    Platform p = virt(1);
    p.backend = io::Backend::pool;
    CHECK_THROWS_AS(run_tiom(small(Mode::mix, 4, 1), p), Error);
  }

  TEST_CASE("write contents are identical across apis on a real file") {
    TiomConfig c = small(Mode::mix, 64, 8, 16 * KiB);
    c.pattern = Pattern::rand_write;
    c.compute_time = 50us;
    c.seed = 99;
    Platform p;
    p.clock = rt::ClockMode::real;
    p.workers = 2;
    p.backend = io::Backend::pool;
    p.read_env = false;
    p.record_calls = true;
    p.digest = true;
    std::vector<BenchResult> rs;
    for (Api a : {Api::standalone, Api::blocking, Api::nonblocking}) {
      c.api = a;
      rs.push_back(run_tiom(c, p));
    }
    CHECK(rs[0].file_digest != 0);
    for (const auto& r : rs) {
      CHECK(r.file_digest == rs[0].file_digest);
      CHECK(r.call_results == rs[0].call_results);
      CHECK(r.call_results.size() == 64);
    }
  }
}
