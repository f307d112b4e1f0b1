// Command-line front end: single runs, sweeps, speedup grids, plot data,
// oracle predictions and device profiles.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "tasio/common/error.hpp"
#include "tasio/io/file.hpp"
#include "tasio/io/profile.hpp"
#include "tasio/sweep/oracle.hpp"
#include "tasio/sweep/plot.hpp"
#include "tasio/sweep/speedup.hpp"
#include "tasio/sweep/sweep.hpp"

namespace {

using namespace tasio;

struct Knobs {
  std::vector<std::string> modes{"mix"};
  std::vector<std::uint64_t> block_kib{64};
  std::vector<double> compute_ms{1};
  std::vector<std::string> patterns{"sr"};
  std::vector<unsigned> max_parallel{128};
  std::uint64_t file_mib = 64;
  std::vector<std::string> apis{"standalone"};
  std::string backend = "sim";
  std::string device_model;
  std::string clock = "virtual";
  unsigned workers = 56;
  std::uint64_t seed = 1;
  double time_limit_s = 60;
  unsigned reps = 1;
  std::string file;
};

void add_knobs(CLI::App& app, Knobs& k, bool lists) {
  auto list = [&](CLI::Option* o) {
    if (lists) o->delimiter(',');
    else o->expected(1);
    return o;
  };
  list(app.add_option("--mode", k.modes, "mix | 1to1 | fjio | fjc"));
  list(app.add_option("--block-size", k.block_kib, "block size in KiB"));
  list(app.add_option("--compute-ms", k.compute_ms, "busy-wait per block in ms"));
  list(app.add_option("--pattern", k.patterns, "sr | sw | rr | rw"));
  list(app.add_option("--max-parallel", k.max_parallel, "parallel task cap (sets the series count)"));
  list(app.add_option("--api", k.apis, "standalone | bq | nb"));
  app.add_option("--file-size", k.file_mib, "file size in MiB");
  app.add_option("--backend", k.backend, "sim | pool");
  app.add_option("--device-model", k.device_model, "device model file (key=value)");
  app.add_option("--clock", k.clock, "real | virtual");
  app.add_option("--workers", k.workers, "execution agents");
  app.add_option("--seed", k.seed, "seed for random patterns and write contents");
  app.add_option("--time-limit", k.time_limit_s, "per-run limit in seconds");
  app.add_option("--reps", k.reps, "repetitions per configuration");
  app.add_option("--file", k.file, "benchmark file for the pool backend (default: temporary)");
}

io::DeviceModel model_of(const Knobs& k) {
  return k.device_model.empty() ? io::DeviceModel::optane_905p() : io::DeviceModel::load(k.device_model);
}

tiom::Platform platform_of(const Knobs& k) {
  tiom::Platform p;
  p.workers = k.workers;
  if (k.clock == "real") {
    p.clock = rt::ClockMode::real;
  } else if (k.clock == "virtual") {
    p.clock = rt::ClockMode::virtual_time;
  } else {
    throw Error(Errc::parse_error, "unknown clock '" + k.clock + "'");
  }
  p.backend = io::parse_backend(k.backend);
  p.model = model_of(k);
  p.file_path = k.file;
  return p;
}

tiom::TiomConfig config_of(const Knobs& k) {
  tiom::TiomConfig c;
  c.mode = tiom::parse_mode(k.modes.at(0));
  c.block_size = k.block_kib.at(0) * tiom::KiB;
  c.compute_time = Nanos{static_cast<std::int64_t>(k.compute_ms.at(0) * 1e6)};
  c.pattern = tiom::parse_pattern(k.patterns.at(0));
  c.max_parallel = k.max_parallel.at(0);
  c.file_size = k.file_mib * tiom::MiB;
  c.api = tiom::parse_api(k.apis.at(0));
  c.time_limit = Nanos{static_cast<std::int64_t>(k.time_limit_s * 1e9)};
  c.seed = k.seed;
  return c;
}

template <typename T, typename F>
std::vector<T> parse_all(const std::vector<std::string>& v, F f) {
  std::vector<T> out;
  for (const auto& s : v) out.push_back(f(s));
  return out;
}

int cmd_run(const Knobs& k) {
  const tiom::Platform p = platform_of(k);
  tiom::TiomConfig c = config_of(k);
  std::cout << sweep::csv_header() << '\n';
  for (unsigned rep = 0; rep < k.reps; ++rep) {
    c.seed = k.seed + rep;
    std::cout << sweep::to_csv(sweep::make_record(c, rep, tiom::run_tiom(c, p))) << std::endl;
  }
  return 0;
}

int cmd_sweep(const Knobs& k, const std::string& grid_name, const std::string& out, bool quiet) {
  sweep::SweepGrid g = grid_name == "full" ? sweep::SweepGrid::full_axes() : sweep::SweepGrid::desk_axes();
  if (grid_name != "full" && grid_name != "desk" && grid_name != "custom") {
    throw Error(Errc::parse_error, "unknown grid '" + grid_name + "'");
  }
  if (grid_name == "custom") {
    g.compute_ms = k.compute_ms;
    g.block_kib = k.block_kib;
  }
  g.modes = parse_all<tiom::Mode>(k.modes, tiom::parse_mode);
  g.patterns = parse_all<tiom::Pattern>(k.patterns, tiom::parse_pattern);
  g.apis = parse_all<tiom::Api>(k.apis, tiom::parse_api);
  g.max_parallel = k.max_parallel;
  g.reps = k.reps;
  g.file_size = k.file_mib * tiom::MiB;
  g.time_limit = Nanos{static_cast<std::int64_t>(k.time_limit_s * 1e9)};
  g.seed = k.seed;
  const std::size_t rows = sweep::run_sweep(g, platform_of(k), out, quiet ? nullptr : &std::cerr);
  std::cout << rows << " rows appended to " << out << '\n';
  return 0;
}

void print_cells(const std::vector<sweep::SpeedupCell>& cells) {
  std::cout << "mode,pattern,max_parallel,compute_ms,block_kib,baseline_s,variant_s,speedup_percent\n";
  auto opt = [](const std::optional<double>& v) { return v ? sweep::format_number(*v) : std::string("absent"); };
  for (const auto& c : cells) {
    std::cout << tiom::to_string(c.mode) << ',' << tiom::to_string(c.pattern) << ',' << c.max_parallel << ','
              << sweep::format_number(c.compute_ms) << ',' << c.block_kib << ',' << opt(c.baseline_s) << ','
              << opt(c.variant_s) << ',' << opt(c.speedup_percent) << '\n';
  }
}

int cmd_profile(const Knobs& k, std::vector<std::uint64_t> blocks_kib, std::vector<unsigned> depths,
                double duration_ms, const std::string& pattern, const std::string& kind) {
  const io::Backend backend = io::parse_backend(k.backend);
  std::vector<std::uint64_t> blocks;
  for (auto b : blocks_kib) blocks.push_back(b * tiom::KiB);
  const std::uint64_t size = k.file_mib * tiom::MiB;

  std::unique_ptr<Clock> clock;
  io::File file = io::File::simulated(size);
  io::IoContextOptions opts;
  opts.backend = backend;
  if (backend == io::Backend::simulated) {
    clock = std::make_unique<ManualClock>();
    opts.model = model_of(k);
  } else {
    if (k.file.empty()) throw Error(Errc::bad_argument, "the pool backend needs --file");
    clock = std::make_unique<SteadyClock>();
    file = io::File::open(k.file, {.create = true, .truncate = false, .direct = false, .read_only = false});
    if (file.size() < size) file.preallocate(size);
  }
  io::IoContext ctx(opts, *clock);
  const auto table = io::device_profile(
      ctx, file.handle(), blocks, depths, Nanos{static_cast<std::int64_t>(duration_ms * 1e6)},
      pattern == "seq" ? io::AccessPattern::seq : io::AccessPattern::rand,
      kind == "write" ? io::IoKind::write : io::IoKind::read, k.seed);
  std::cout << "block_kib,depth,mib_s\n";
  for (const auto& c : table) {
    std::cout << c.block_size / tiom::KiB << ',' << c.depth << ',' << sweep::format_number(c.mib_s) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task I/O Meter: task-aware storage I/O benchmark and sweep harness"};
  app.require_subcommand(1);

  Knobs run_k;
  auto* run = app.add_subcommand("run", "run one configuration (CSV rows on stdout)");
  add_knobs(*run, run_k, false);

  Knobs sweep_k;
  sweep_k.modes = {"mix"};
  std::string grid = "desk", sweep_out = "sweep.csv";
  bool quiet = false;
  auto* sw = app.add_subcommand("sweep", "run a grid of configurations, appending CSV rows");
  add_knobs(*sw, sweep_k, true);
  sw->add_option("--grid", grid, "desk | full | custom (custom uses --compute-ms/--block-size)");
  sw->add_option("--out", sweep_out, "CSV output file");
  sw->add_flag("--quiet", quiet, "no progress on stderr");

  std::string sp_csv, sp_base = "standalone", sp_var = "nb";
  auto* sp = app.add_subcommand("speedup", "median-based speedup grid from a sweep CSV");
  sp->add_option("--csv", sp_csv, "sweep CSV")->required();
  sp->add_option("--baseline", sp_base, "baseline api");
  sp->add_option("--variant", sp_var, "variant api");

  std::string pl_csv, pl_out = "plot.dat", pl_kind = "speedup", pl_base = "standalone", pl_var = "nb";
  auto* pl = app.add_subcommand("plot", "gnuplot data (plus CSV twin) from a sweep CSV");
  pl->add_option("--csv", pl_csv, "sweep CSV")->required();
  pl->add_option("--out", pl_out, "gnuplot data file");
  pl->add_option("--kind", pl_kind, "speedup | bandwidth");
  pl->add_option("--baseline", pl_base, "baseline api (speedup)");
  pl->add_option("--variant", pl_var, "variant api (speedup) or api (bandwidth)");

  Knobs or_k;
  auto* orc = app.add_subcommand("oracle", "predicted makespan from the discrete-event oracle");
  add_knobs(*orc, or_k, false);

  Knobs pr_k;
  pr_k.file_mib = 1024;
  std::vector<std::uint64_t> pr_blocks{4, 1024};
  std::vector<unsigned> pr_depths{1, 2, 3, 4};
  double pr_ms = 1000;
  std::string pr_pattern = "rand", pr_kind = "read";
  auto* pr = app.add_subcommand("profile", "fio-style throughput table of the device");
  pr->add_option("--block-sizes", pr_blocks, "block sizes in KiB")->delimiter(',');
  pr->add_option("--depths", pr_depths, "requests in flight")->delimiter(',');
  pr->add_option("--duration-ms", pr_ms, "measurement window per cell");
  pr->add_option("--pattern", pr_pattern, "seq | rand");
  pr->add_option("--kind", pr_kind, "read | write");
  pr->add_option("--backend", pr_k.backend, "sim | pool");
  pr->add_option("--device-model", pr_k.device_model, "device model file");
  pr->add_option("--file", pr_k.file, "file for the pool backend");
  pr->add_option("--file-size", pr_k.file_mib, "file size in MiB");
  pr->add_option("--seed", pr_k.seed, "seed for random offsets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_k);
    if (*sw) return cmd_sweep(sweep_k, grid, sweep_out, quiet);
    if (*sp) {
      print_cells(sweep::compute_speedup(sweep::read_csv(sp_csv), tiom::parse_api(sp_base), tiom::parse_api(sp_var)));
      return 0;
    }
    if (*pl) {
      const auto rows = sweep::read_csv(pl_csv);
      std::vector<sweep::PlotSurface> surfaces;
      if (pl_kind == "speedup") {
        surfaces = sweep::speedup_surfaces(
            sweep::compute_speedup(rows, tiom::parse_api(pl_base), tiom::parse_api(pl_var)));
      } else if (pl_kind == "bandwidth") {
        surfaces = sweep::bandwidth_surfaces(rows, tiom::parse_api(pl_var));
      } else {
        throw Error(Errc::parse_error, "unknown plot kind '" + pl_kind + "'");
      }
      const auto twin = sweep::emit_plot_data(surfaces, pl_out);
      std::cout << "wrote " << pl_out << " and " << twin.string() << '\n';
      return 0;
    }
    if (*orc) {
      const tiom::TiomConfig c = config_of(or_k);
      const Nanos t = sweep::oracle_makespan(c, or_k.workers, model_of(or_k));
      std::cout << "makespan_s," << sweep::format_number(static_cast<double>(t.count()) / 1e9) << '\n';
      return 0;
    }
    if (*pr) return cmd_profile(pr_k, pr_blocks, pr_depths, pr_ms, pr_pattern, pr_kind);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
