// Acceptance run: one verdict line per criterion. Exits non-zero only when a
// criterion crashes, or with --strict when any verdict is FAIL.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/trace_check.hpp"
#include "tasio/common/error.hpp"
#include "tasio/io/file.hpp"
#include "tasio/io/profile.hpp"
#include "tasio/sweep/oracle.hpp"
#include "tasio/sweep/speedup.hpp"
#include "tasio/sweep/sweep.hpp"
#include "tasio/task_aware_io.hpp"
#include "tasio/tiom/benchmark.hpp"
#include "tasio/tiom/graph.hpp"

using namespace tasio;
using namespace std::chrono_literals;
using tiom::Api;
using tiom::Mode;
using tiom::Pattern;
using tiom::KiB;
using tiom::MiB;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int number;
  std::string title;
  std::function<Verdict()> run;
};

std::string fixed(double v, int digits = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

const io::DeviceModel kModel = io::DeviceModel::optane_905p();

tiom::Platform virtual_platform(unsigned workers) {
  tiom::Platform p;
  p.workers = workers;
  p.read_env = false;
  return p;
}

// -- 1 ------------------------------------------------------------------------

Verdict calibration_echo() {
  ManualClock clock;
  io::IoContextOptions o;
  o.model = kModel;
  io::IoContext ctx(o, clock);
  const io::File file = io::File::simulated(1ull << 30);
  const std::vector<unsigned> depths{1, 2, 3, 4};
  Verdict v;
  double lo = 1e300, hi = 0;
  auto judge = [&](const std::vector<io::ProfileCell>& cells, double rated, const char* what) {
    for (const auto& c : cells) {
      const double err = std::abs(c.mib_s / rated - 1);
      lo = std::min(lo, c.mib_s);
      hi = std::max(hi, c.mib_s);
      if (err > 0.02) {
        v.pass = false;
        v.detail += std::string(what) + " depth " + std::to_string(c.depth) + " " + fixed(c.mib_s) + " MiB/s; ";
      }
    }
    v.detail += std::string(what) + " " + fixed(cells.front().mib_s) + ".." + fixed(cells.back().mib_s) + " MiB/s; ";
  };
  judge(io::device_profile(ctx, file.handle(), std::vector<std::uint64_t>{MiB}, depths, 1s,
                           io::AccessPattern::rand, io::IoKind::read),
        2548, "1 MiB rand read");
  judge(io::device_profile(ctx, file.handle(), std::vector<std::uint64_t>{4 * KiB}, depths, 1s,
                           io::AccessPattern::rand, io::IoKind::write),
        2255, "4 KiB rand write");
  return v;
}

// -- 2 ------------------------------------------------------------------------

Verdict oracle_equivalence() {
  std::mt19937_64 rng(2024);
  const std::vector<std::uint64_t> blocks_kib{4, 16, 64, 256, 1024};
  const std::vector<Nanos> computes{0ns, 50us, 200us, 1ms, 4ms};
  Verdict v;
  double worst = 0;
  int runs = 0;
  for (int i = 0; i < 60; ++i) {
    tiom::TiomConfig c;
    c.mode = static_cast<Mode>(i % 4);
    c.api = static_cast<Api>((i / 4) % 3);
    c.pattern = static_cast<Pattern>(rng() % 4);
    c.block_size = blocks_kib[rng() % blocks_kib.size()] * KiB;
    c.compute_time = computes[rng() % computes.size()];
    c.seed = rng();
    const unsigned per_task = c.mode == Mode::mix ? 1 : c.mode == Mode::one_to_one ? 2 : 5;
    const std::uint64_t stage = c.mode == Mode::fjio ? 4 : 1;
    const std::uint64_t max_blocks = (c.mode == Mode::fjio ? 512 * 4 / 5 : 512 / per_task) / stage * stage;
    const std::uint64_t blocks = stage * (1 + rng() % (max_blocks / stage));
    c.file_size = blocks * c.block_size;
    c.max_parallel = c.width() * static_cast<unsigned>(1 + rng() % 32);
    const unsigned workers = 1 + static_cast<unsigned>(rng() % 8);
    if (tiom::build_task_graph(c).tasks.size() > 512) throw Error(Errc::bad_argument, "generator exceeded 512 tasks");

    const tiom::BenchResult r = tiom::run_tiom(c, virtual_platform(workers));
    const Nanos o = sweep::oracle_makespan(c, workers, kModel);
    const double dev = std::abs(static_cast<double>(r.elapsed.count()) / static_cast<double>(o.count()) - 1);
    worst = std::max(worst, dev);
    ++runs;
    if (dev > 0.10 || !r.completed_fully) {
      v.pass = false;
      v.detail += c.describe() + " workers " + std::to_string(workers) + ": runtime " + fixed(r.elapsed_s(), 6) +
                  " s vs oracle " + fixed(static_cast<double>(o.count()) / 1e9, 6) + " s; ";
    }
  }
  v.detail = std::to_string(runs) + " configs, worst deviation " + fixed(100 * worst, 3) + "%; " + v.detail;
  return v;
}

// -- 3 ------------------------------------------------------------------------

Verdict saturation_ratio() {
  const sweep::SweepGrid g = sweep::SweepGrid::desk_axes();
  const double rated = kModel.read_bw_mib_s;
  Verdict v;
  std::string cells;
  for (double ms : g.compute_ms) {
    for (std::uint64_t kib : g.block_kib) {
      const double ratio = static_cast<double>(kib) / ms;
      if (ratio > 4 && ratio < 64) continue;
      tiom::TiomConfig c;
      c.block_size = kib * KiB;
      c.compute_time = std::chrono::duration_cast<Nanos>(std::chrono::duration<double, std::milli>(ms));
      c.file_size = 2048 * MiB;
      c.max_parallel = 128;
      const tiom::BenchResult r = tiom::run_tiom(c, virtual_platform(56));
      const double share = r.bandwidth_mib_s / rated;
      const bool ok = ratio >= 64 ? share >= 0.90 : share <= 0.75;
      v.pass = v.pass && ok;
      cells += "(" + fixed(ms, 0) + "ms," + std::to_string(kib) + "KiB) " + fixed(100 * share, 1) + "%" +
               (ok ? "" : " OUT") + "; ";
    }
  }
  v.detail = "share of rated read bandwidth: " + cells;
  return v;
}

// -- 4 ------------------------------------------------------------------------

struct SpeedupPair {
  double runtime_pct;
  double oracle_pct;
};

SpeedupPair nb_speedup(std::uint64_t kib, unsigned workers) {
  tiom::TiomConfig c;
  c.block_size = kib * KiB;
  c.compute_time = 1ms;
  c.pattern = Pattern::rand_write;
  c.max_parallel = 128;
  c.file_size = 64 * MiB;
  const double base = tiom::run_tiom(c, virtual_platform(workers)).elapsed_s();
  const double base_o = static_cast<double>(sweep::oracle_makespan(c, workers, kModel).count());
  c.api = Api::nonblocking;
  const double nb = tiom::run_tiom(c, virtual_platform(workers)).elapsed_s();
  const double nb_o = static_cast<double>(sweep::oracle_makespan(c, workers, kModel).count());
  return {sweep::speedup_percent(base, nb), sweep::speedup_percent(base_o, nb_o)};
}

Verdict overlap_benefit() {
  Verdict v;
  const SpeedupPair s = nb_speedup(64, 4);
  const bool positive = s.runtime_pct > 0;
  const bool close = std::abs(s.runtime_pct - s.oracle_pct) <= 0.15 * std::abs(s.oracle_pct);
  v.detail = "64 KiB/1 ms nb speedup " + fixed(s.runtime_pct) + "% vs oracle " + fixed(s.oracle_pct) + "% (" +
             (positive && close ? "ok" : "OUT") + "); ";
  v.pass = positive && close;
  for (std::uint64_t kib : {32, 64, 128}) {
    const SpeedupPair c = nb_speedup(kib, 4);
    const bool ok = c.runtime_pct >= 40;
    v.pass = v.pass && ok;
    v.detail += std::to_string(kib) + " KiB " + fixed(c.runtime_pct) + "%" + (ok ? "" : " < 40%") + "; ";
  }
  return v;
}

// -- 5 ------------------------------------------------------------------------

Verdict amdahl_region() {
  Verdict v;
  for (Pattern p : {Pattern::seq_read, Pattern::rand_write}) {
    tiom::TiomConfig c;
    c.block_size = 4 * KiB;
    c.compute_time = 128ms;
    c.pattern = p;
    c.file_size = 64 * MiB;
    c.max_parallel = 128;
    const tiom::BenchResult base = tiom::run_tiom(c, virtual_platform(56));
    for (Api a : {Api::blocking, Api::nonblocking}) {
      c.api = a;
      const tiom::BenchResult r = tiom::run_tiom(c, virtual_platform(56));
      const double sp = sweep::speedup_percent(base.elapsed_s(), r.elapsed_s());
      const bool ok = std::abs(sp) <= 5 && r.completed_fully && base.completed_fully;
      v.pass = v.pass && ok;
      v.detail += std::string(tiom::to_string(p)) + "/" + std::string(tiom::to_string(a)) + " " + fixed(sp, 3) + "%" +
                  (ok ? "" : " OUT") + "; ";
    }
  }
  return v;
}

// -- 6 ------------------------------------------------------------------------

Verdict capacity_retry() {
  rt::RuntimeConfig rc;
  rc.workers = 4;
  rc.clock = rt::ClockMode::virtual_time;
  rt::Runtime runtime(rc);
  TasioConfig tc;
  tc.max_in_flight = 1000;
  tc.model = kModel;
  tc.read_env = false;
  TaskAwareIo t(runtime, tc);
  const io::File f = io::File::simulated(256 * MiB);
  std::vector<IoResult> slots(4096);
  std::size_t over = 0;
  for (int i = 0; i < 4096; ++i) {
    runtime.spawn([&, i] {
      t.ta_pwrite(f.handle(), nullptr, 64 * KiB, static_cast<off_t>(i) * 64 * KiB, &slots[i]);
      if (t.context().outstanding() > 1000) ++over;
    });
  }
  runtime.run_to_completion();
  t.shutdown();
  const TasioStats st = t.stats();
  std::size_t done = 0, short_wait = 0, retried = 0;
  Nanos min_delay = Nanos::max();
  for (const auto& s : slots) done += s.done && s.result == 64 * 1024;
  for (const OpRecord& op : t.op_log()) {
    if (op.retries == 0) continue;
    ++retried;
    min_delay = std::min(min_delay, op.accepted - op.issued);
    if (op.accepted - op.issued < 1ms) ++short_wait;
  }
  Verdict v;
  v.pass = st.cap_violations == 0 && over == 0 && st.max_outstanding <= 1000 && done == 4096 && retried > 0 &&
           short_wait == 0;
  v.detail = "max outstanding " + std::to_string(st.max_outstanding) + ", cap violations " +
             std::to_string(st.cap_violations + over) + ", completed " + std::to_string(done) + "/4096, retried " +
             std::to_string(retried) + ", min added latency " +
             (retried ? fixed(static_cast<double>(min_delay.count()) / 1e6, 3) + " ms" : std::string("n/a"));
  return v;
}

// -- 7 ------------------------------------------------------------------------

Verdict semantics_preservation() {
  tiom::TiomConfig c;
  c.block_size = 16 * KiB;
  c.file_size = 4 * MiB;
  c.compute_time = 20us;
  c.pattern = Pattern::rand_write;
  c.max_parallel = 16;
  c.seed = 77;
  tiom::Platform p;
  p.clock = rt::ClockMode::real;
  p.workers = 4;
  p.backend = io::Backend::pool;
  p.read_env = false;
  p.record_calls = true;
  p.digest = true;
  std::vector<tiom::BenchResult> rs;
  for (Api a : {Api::standalone, Api::blocking, Api::nonblocking}) {
    c.api = a;
    rs.push_back(tiom::run_tiom(c, p));
  }
  Verdict v;
  std::ostringstream os;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    os << tiom::to_string(static_cast<Api>(i)) << " digest " << std::hex << rs[i].file_digest << std::dec << ", "
       << rs[i].call_results.size() << " calls; ";
    v.pass = v.pass && rs[i].file_digest == rs[0].file_digest && rs[i].call_results == rs[0].call_results &&
             rs[i].completed_fully && rs[i].call_results.size() == c.blocks();
  }
  v.pass = v.pass && rs[0].file_digest != 0;
  v.detail = os.str();
  return v;
}

// -- 8 ------------------------------------------------------------------------

struct Exercised {
  std::size_t tasks = 0, pauses = 0, nb_ops = 0, retried = 0;
};

std::vector<std::string> one_schedule(std::uint64_t seed, Exercised& ex) {
  std::mt19937_64 rng(seed);
  rt::RuntimeConfig rc;
  rc.workers = 1 + static_cast<unsigned>(rng() % 4);
  rc.clock = rt::ClockMode::virtual_time;
  rc.trace = true;
  rt::Runtime runtime(rc);
  TasioConfig tc;
  tc.max_in_flight = 2 + rng() % 16;
  tc.model = kModel;
  tc.read_env = false;
  TaskAwareIo t(runtime, tc);
  const io::File f = io::File::simulated(64 * MiB);

  std::vector<rt::ResourceId> res;
  const unsigned nres = 1 + static_cast<unsigned>(rng() % 5);
  for (unsigned i = 0; i < nres; ++i) res.push_back(runtime.register_resource());
  std::vector<check::Access> acc;
  std::vector<std::uint64_t> nb_ops(1);
  const unsigned ntasks = 5 + static_cast<unsigned>(rng() % 40);
  for (unsigned k = 0; k < ntasks; ++k) {
    std::vector<rt::ResourceId> reads, writes;
    check::Access a;
    for (unsigned r = 0; r < nres; ++r) {
      const auto pick = rng() % 4;
      if (pick == 1) reads.push_back(res[r]), a.reads.push_back(rt::raw(res[r]));
      if (pick == 2) writes.push_back(res[r]), a.writes.push_back(rt::raw(res[r]));
    }
    acc.push_back(a);
    std::vector<int> steps;
    const int nsteps = static_cast<int>(rng() % 5);
    for (int s = 0; s < nsteps; ++s) steps.push_back(static_cast<int>(rng() % 4));
    const std::uint64_t len = 4096ull << (rng() % 8);
    const off_t off = static_cast<off_t>(4096 * (rng() % 1024));
    const Nanos busy{static_cast<std::int64_t>(rng() % 300'000)};
    runtime.spawn(
        [&t, &runtime, &f, steps, len, off, busy] {
          for (int s : steps) {
            switch (s) {
              case 0: runtime.busy_wait(busy); break;
              case 1: t.pread(f.handle(), nullptr, len, off); break;
              case 2: t.pwrite(f.handle(), nullptr, len, off); break;
              default: t.ta_pread(f.handle(), nullptr, len, off); break;
            }
          }
        },
        reads, writes);
  }
  runtime.run_to_completion();
  t.shutdown();

  const auto tr = runtime.trace();
  std::vector<std::string> bad = check::dependency_safety(tr, check::conflict_preds(acc));
  for (auto& s : check::lifecycle(tr)) bad.push_back(s);
  for (auto& s : check::no_idle_with_work(tr, rc.workers)) bad.push_back(s);
  for (auto& s : check::polling_liveness(tr, 2 * rc.poll_period.count())) bad.push_back(s);

  // Event-counter gating: a task completes only after its last non-blocking op.
  std::map<std::uint64_t, std::int64_t> complete_at;
  for (const auto& r : tr)
    if (r.event == rt::TraceEvent::complete) complete_at[r.id] = r.time_ns;
  std::size_t nb = 0, blocking_paused = 0;
  std::set<std::uint64_t> ops;
  for (const OpRecord& op : t.op_log()) {
    if (!ops.insert(op.op).second) bad.push_back("op logged twice");
    if (op.blocking) {
      blocking_paused += op.length > 0;
      continue;
    }
    ++nb;
    if (complete_at[rt::raw(op.task)] < op.completed.count()) {
      bad.push_back("task " + std::to_string(rt::raw(op.task)) + " completed before its I/O");
    }
  }
  // Exactly-once wake: one resume per paused blocking op, one decrement per
  // non-blocking op, nothing left behind.
  std::size_t pauses = 0;
  for (const auto& r : tr) pauses += r.event == rt::TraceEvent::pause;
  const TasioStats st = t.stats();
  if (st.resumes != pauses || pauses != blocking_paused) {
    bad.push_back("resumes " + std::to_string(st.resumes) + " for " + std::to_string(pauses) + " pauses and " +
                  std::to_string(blocking_paused) + " blocking ops");
  }
  ex.tasks += ntasks;
  ex.pauses += pauses;
  ex.nb_ops += nb;
  ex.retried += st.retried_ops;
  if (st.decrements != nb) bad.push_back("decrements " + std::to_string(st.decrements) + " for " + std::to_string(nb));
  if (st.reentrant_polls != 0) bad.push_back("reentrant poll");
  if (st.cap_violations != 0) bad.push_back("cap exceeded");
  for (unsigned k = 1; k <= ntasks; ++k) {
    if (runtime.event_count(rt::TaskId{k}) != 0) bad.push_back("event counter left non-zero");
  }
  return bad;
}

Verdict property_suite() {
  Verdict v;
  int failed = 0;
  Exercised ex;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    const auto bad = one_schedule(seed, ex);
    if (!bad.empty()) {
      ++failed;
      if (failed <= 3) v.detail += "seed " + std::to_string(seed) + ": " + check::join(bad);
    }
  }
  v.pass = failed == 0;
  v.detail = std::to_string(200 - failed) + "/200 schedules clean (" + std::to_string(ex.tasks) + " tasks, " +
             std::to_string(ex.pauses) + " pauses, " + std::to_string(ex.nb_ops) + " non-blocking ops, " +
             std::to_string(ex.retried) + " retried ops); " + v.detail;
  return v;
}

// -- 9 ------------------------------------------------------------------------

Verdict fjio_structure() {
  Verdict v;
  std::set<std::uint64_t> blocks;
  for (std::uint64_t b : sweep::SweepGrid::full_axes().block_kib) blocks.insert(b);
  int graphs = 0;
  for (std::uint64_t kib : blocks) {
    for (std::uint64_t file_mib : {64u, 256u, 2048u}) {
      for (unsigned mp : {128u, 256u}) {
        tiom::TiomConfig c;
        c.mode = Mode::fjio;
        c.block_size = kib * KiB;
        c.file_size = file_mib * MiB;
        c.max_parallel = mp;
        const tiom::TaskGraph g = tiom::build_task_graph(c);
        ++graphs;
        std::vector<unsigned> io_succ(g.tasks.size(), 0);
        std::size_t computes = 0, ios = 0;
        bool ok = true;
        for (const auto& t : g.tasks) {
          if (t.kind == tiom::TaskKind::compute) {
            ++computes;
            ok = ok && t.preds.size() == 4;
            for (auto p : t.preds) {
              ok = ok && g.tasks[p].kind == tiom::TaskKind::io && g.tasks[p].series == t.series;
              ++io_succ[p];
            }
          } else {
            ++ios;
            ok = ok && t.kind == tiom::TaskKind::io && t.preds.size() <= 1;
            for (auto p : t.preds) ok = ok && g.tasks[p].kind == tiom::TaskKind::compute;
          }
        }
        for (std::size_t i = 0; i < g.tasks.size(); ++i) {
          if (g.tasks[i].kind == tiom::TaskKind::io) ok = ok && io_succ[i] == 1;
        }
        ok = ok && ios == 4 * computes && ios * c.block_size == c.file_size;
        if (!ok) {
          v.pass = false;
          v.detail += c.describe() + " malformed; ";
        }
      }
    }
  }
  v.detail = std::to_string(graphs) + " graphs checked; " + v.detail;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  bool strict = false;
  std::vector<int> only;
  app.add_flag("--strict", strict, "exit non-zero when any criterion fails");
  app.add_option("--only", only, "criterion numbers to run");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "device calibration echo", calibration_echo},
      {2, "oracle equivalence", oracle_equivalence},
      {3, "saturation ratio", saturation_ratio},
      {4, "overlap benefit", overlap_benefit},
      {5, "amdahl region", amdahl_region},
      {6, "capacity and retry", capacity_retry},
      {7, "semantics preservation", semantics_preservation},
      {8, "dependency and event properties", property_suite},
      {9, "fjio structure", fjio_structure},
  };

  int passed = 0, failed = 0, crashed = 0;
  for (const Criterion& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.number) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
      ++crashed;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    (v.pass ? passed : failed) += 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.number << " (" << c.title << ", "
              << fixed(secs, 1) << " s): " << v.detail << std::endl;
  }
  std::cout << passed << " passed, " << failed << " failed" << std::endl;
  if (crashed > 0) return 2;
  return strict && failed > 0 ? 1 : 0;
}
