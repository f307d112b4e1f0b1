#include "tasio/sweep/sweep.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tasio/common/error.hpp"

namespace tasio::sweep {

void SweepGrid::validate() const {
  if (compute_ms.empty() || block_kib.empty() || patterns.empty() || modes.empty() ||
      apis.empty() || max_parallel.empty()) {
    throw Error(Errc::bad_argument, "sweep grid has an empty axis");
  }
  if (reps == 0) throw Error(Errc::bad_argument, "sweep needs at least one rep");
}

std::size_t SweepGrid::cell_count() const noexcept {
  return compute_ms.size() * block_kib.size() * patterns.size() * modes.size() * apis.size() *
         max_parallel.size();
}

SweepGrid SweepGrid::full_axes() {
  SweepGrid g;
  for (double c = 1; c <= 128; c *= 2) g.compute_ms.push_back(c);
  for (std::uint64_t b = 4; b <= 8192; b *= 2) g.block_kib.push_back(b);
  g.patterns = {tiom::Pattern::seq_read};
  g.modes = {tiom::Mode::mix};
  g.apis = {tiom::Api::standalone};
  g.max_parallel = {128};
  g.reps = 4;
  return g;
}

SweepGrid SweepGrid::desk_axes() {
  SweepGrid g = full_axes();
  g.compute_ms = {1, 4, 16, 64};
  g.block_kib = {4, 64, 1024, 8192};
  return g;
}

std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

std::string_view csv_header() noexcept {
  return "mode,api,pattern,block_kib,compute_ms,max_parallel,rep,elapsed_s,bytes,bandwidth_mibs,"
         "completed";
}

std::string to_csv(const SweepRecord& r) {
  std::ostringstream os;
  os << tiom::to_string(r.mode) << ',' << tiom::to_string(r.api) << ',' << tiom::to_string(r.pattern)
     << ',' << r.block_kib << ',' << format_number(r.compute_ms) << ',' << r.max_parallel << ','
     << r.rep << ',' << format_number(r.elapsed_s) << ',' << r.bytes << ','
     << format_number(r.bandwidth_mibs) << ',' << (r.completed ? 1 : 0);
  return os.str();
}

namespace {

template <typename T>
T parse_field(std::string_view text, std::string_view what) {
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(Errc::parse_error, "bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

SweepRecord parse_csv_row(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != 11) throw Error(Errc::parse_error, "expected 11 CSV fields: " + std::string(line));
  SweepRecord r;
  r.mode = tiom::parse_mode(f[0]);
  r.api = tiom::parse_api(f[1]);
  r.pattern = tiom::parse_pattern(f[2]);
  r.block_kib = parse_field<std::uint64_t>(f[3], "block_kib");
  r.compute_ms = parse_field<double>(f[4], "compute_ms");
  r.max_parallel = parse_field<unsigned>(f[5], "max_parallel");
  r.rep = parse_field<unsigned>(f[6], "rep");
  r.elapsed_s = parse_field<double>(f[7], "elapsed_s");
  r.bytes = parse_field<std::uint64_t>(f[8], "bytes");
  r.bandwidth_mibs = parse_field<double>(f[9], "bandwidth_mibs");
  const int done = parse_field<int>(f[10], "completed");
  if (done != 0 && done != 1) throw Error(Errc::parse_error, "completed must be 0 or 1");
  r.completed = done == 1;
  return r;
}

std::vector<SweepRecord> read_csv(std::istream& in) {
  std::vector<SweepRecord> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line == csv_header()) continue;
    rows.push_back(parse_csv_row(line));
  }
  return rows;
}

std::vector<SweepRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  return read_csv(in);
}

SweepRecord make_record(const tiom::TiomConfig& c, unsigned rep, const tiom::BenchResult& r) {
  SweepRecord s;
  s.mode = c.mode;
  s.api = c.api;
  s.pattern = c.pattern;
  s.block_kib = c.block_size / tiom::KiB;
  s.compute_ms = static_cast<double>(c.compute_time.count()) / 1e6;
  s.max_parallel = c.max_parallel;
  s.rep = rep;
  s.elapsed_s = r.elapsed_s();
  s.bytes = r.bytes;
  s.bandwidth_mibs = r.bandwidth_mib_s;
  s.completed = r.completed_fully;
  return s;
}

std::size_t run_sweep(const SweepGrid& grid, const BenchFn& bench, const std::filesystem::path& out,
                      std::ostream* log) {
  grid.validate();
  const bool fresh = !std::filesystem::exists(out) || std::filesystem::file_size(out) == 0;
  std::ofstream os(out, std::ios::app);
  if (!os) throw Error(Errc::io_failure, "cannot write " + out.string());
  if (fresh) os << csv_header() << '\n';

  std::size_t rows = 0;
  for (tiom::Mode mode : grid.modes)
    for (tiom::Pattern pattern : grid.patterns)
      for (unsigned mp : grid.max_parallel)
        for (tiom::Api api : grid.apis)
          for (double c : grid.compute_ms)
            for (std::uint64_t b : grid.block_kib)
              for (unsigned rep = 0; rep < grid.reps; ++rep) {
                tiom::TiomConfig cfg;
                cfg.mode = mode;
                cfg.pattern = pattern;
                cfg.max_parallel = mp;
                cfg.api = api;
                cfg.compute_time = Nanos{static_cast<std::int64_t>(c * 1e6)};
                cfg.block_size = b * tiom::KiB;
                cfg.file_size = grid.file_size;
                cfg.time_limit = grid.time_limit;
                cfg.seed = grid.seed + rep;
                SweepRecord rec;
                try {
                  rec = make_record(cfg, rep, bench(cfg));
                } catch (const std::exception& e) {
                  if (log) *log << "sweep: " << cfg.describe() << " rep " << rep << " failed: " << e.what() << '\n';
                  rec = make_record(cfg, rep, tiom::BenchResult{});
                  rec.completed = false;
                }
                os << to_csv(rec) << '\n';
                os.flush();
                ++rows;
                if (log) *log << to_csv(rec) << '\n';
              }
  return rows;
}

std::size_t run_sweep(const SweepGrid& grid, const tiom::Platform& platform,
                      const std::filesystem::path& out, std::ostream* log) {
  return run_sweep(grid, [&](const tiom::TiomConfig& c) { return tiom::run_tiom(c, platform); }, out, log);
}

double median(std::vector<double> v) {
  if (v.empty()) throw Error(Errc::bad_argument, "median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

}  // namespace tasio::sweep
