#include "tasio/sweep/plot.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include "tasio/common/error.hpp"

namespace tasio::sweep {

namespace {

using Group = std::tuple<tiom::Mode, tiom::Pattern, unsigned>;

std::string group_label(const Group& g, std::string_view what) {
  return std::string(what) + ":" + std::string(tiom::to_string(std::get<0>(g))) + ":" +
         std::string(tiom::to_string(std::get<1>(g))) + ":" + std::to_string(std::get<2>(g));
}

struct Builder {
  std::set<double> xs;
  std::set<std::uint64_t> ys;
  std::map<std::pair<double, std::uint64_t>, std::optional<double>> z;

  PlotSurface finish(std::string label) const {
    PlotSurface s;
    s.label = std::move(label);
    s.xs.assign(xs.begin(), xs.end());
    s.ys.assign(ys.begin(), ys.end());
    for (double x : s.xs) {
      for (std::uint64_t y : s.ys) {
        auto it = z.find({x, y});
        s.z.push_back(it == z.end() ? std::nullopt : it->second);
      }
    }
    return s;
  }
};

std::string z_text(const std::optional<double>& z) { return z ? format_number(*z) : "NaN"; }

}  // namespace

std::vector<PlotSurface> speedup_surfaces(const std::vector<SpeedupCell>& cells) {
  std::map<Group, Builder> groups;
  for (const SpeedupCell& c : cells) {
    Builder& b = groups[Group{c.mode, c.pattern, c.max_parallel}];
    b.xs.insert(c.compute_ms);
    b.ys.insert(c.block_kib);
    b.z[{c.compute_ms, c.block_kib}] = c.speedup_percent;
  }
  std::vector<PlotSurface> out;
  for (const auto& [g, b] : groups) out.push_back(b.finish(group_label(g, "speedup")));
  return out;
}

std::vector<PlotSurface> bandwidth_surfaces(const std::vector<SweepRecord>& rows, tiom::Api api) {
  std::map<Group, std::map<std::pair<double, std::uint64_t>, std::vector<double>>> groups;
  for (const SweepRecord& r : rows) {
    if (r.api != api) continue;
    auto& cell = groups[Group{r.mode, r.pattern, r.max_parallel}][{r.compute_ms, r.block_kib}];
    if (r.elapsed_s > 0.0) cell.push_back(r.bandwidth_mibs);
  }
  std::vector<PlotSurface> out;
  for (const auto& [g, cells] : groups) {
    Builder b;
    for (const auto& [xy, values] : cells) {
      b.xs.insert(xy.first);
      b.ys.insert(xy.second);
      b.z[xy] = values.empty() ? std::nullopt : std::optional<double>(median(values));
    }
    out.push_back(b.finish(group_label(g, std::string("bandwidth:") + std::string(tiom::to_string(api)))));
  }
  return out;
}

std::filesystem::path emit_plot_data(const std::vector<PlotSurface>& surfaces,
                                     const std::filesystem::path& out) {
  std::filesystem::path twin = out;
  if (twin.extension() == ".csv") {
    twin += ".csv";
  } else {
    twin.replace_extension(".csv");
  }
  std::ofstream dat(out);
  std::ofstream csv(twin);
  if (!dat || !csv) throw Error(Errc::io_failure, "cannot write plot data to " + out.string());

  csv << "label,compute_ms,block_kib,z\n";
  for (std::size_t s = 0; s < surfaces.size(); ++s) {
    const PlotSurface& p = surfaces[s];
    if (s > 0) dat << "\n\n";
    dat << "# " << p.label << "\n";
    for (std::size_t xi = 0; xi < p.xs.size(); ++xi) {
      for (std::size_t yi = 0; yi < p.ys.size(); ++yi) {
        const std::string z = z_text(p.at(xi, yi));
        dat << format_number(p.xs[xi]) << ' ' << p.ys[yi] << ' ' << z << '\n';
        csv << p.label << ',' << format_number(p.xs[xi]) << ',' << p.ys[yi] << ',' << z << '\n';
      }
      dat << '\n';
    }
  }
  return twin;
}

}  // namespace tasio::sweep
