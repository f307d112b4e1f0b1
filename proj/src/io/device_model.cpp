#include "tasio/io/device_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tasio/common/error.hpp"

namespace tasio::io {

namespace {

constexpr double kMiB = 1024.0 * 1024.0;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const std::string str(v);
    const double d = std::stod(str, &used);
    if (used != str.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw Error(Errc::parse_error, std::string(key) + ": not a number '" + std::string(v) + "'");
  }
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw Error(Errc::parse_error, std::string(key) + ": not an integer '" + std::string(v) + "'");
  }
  return out;
}

}  // namespace

void DeviceModel::validate() const {
  if (!(read_bw_mib_s > 0.0) || !(write_bw_mib_s > 0.0)) {
    throw Error(Errc::bad_argument, "device bandwidths must be positive");
  }
  if (base_latency.count() < 0) throw Error(Errc::bad_argument, "negative base latency");
  if (max_depth == 0) throw Error(Errc::bad_argument, "max_depth must be >= 1");
  std::uint64_t prev = 0;
  bool first = true;
  for (auto [kib, m] : write_degradation) {
    if (!(m > 0.0 && m <= 1.0)) throw Error(Errc::bad_argument, "degradation outside (0, 1]");
    if (!first && kib <= prev) throw Error(Errc::bad_argument, "degradation sizes must increase");
    prev = kib;
    first = false;
  }
}

double DeviceModel::degradation(std::uint64_t bytes) const {
  if (write_degradation.empty()) return 1.0;
  const double kib = static_cast<double>(bytes) / 1024.0;
  const auto& pts = write_degradation;
  if (kib <= static_cast<double>(pts.front().first)) return pts.front().second;
  if (kib >= static_cast<double>(pts.back().first)) return pts.back().second;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double x1 = static_cast<double>(pts[i].first);
    if (kib <= x1) {
      const double x0 = static_cast<double>(pts[i - 1].first);
      const double f = (kib - x0) / (x1 - x0);
      return pts[i - 1].second + f * (pts[i].second - pts[i - 1].second);
    }
  }
  return pts.back().second;
}

double DeviceModel::rate_bytes_per_ns(IoKind kind, std::uint64_t bytes) const {
  const double mib_s = kind == IoKind::read ? read_bw_mib_s : write_bw_mib_s * degradation(bytes);
  return mib_s * kMiB / 1e9;
}

DeviceModel DeviceModel::optane_905p() {
  DeviceModel m;
  m.read_bw_mib_s = 2548.0;
  m.write_bw_mib_s = 2255.0;
  m.base_latency = Nanos{0};
  m.max_depth = 4;
  m.write_degradation = {{1024, 1.0}, {8192, 0.6}};
  return m;
}

DeviceModel DeviceModel::parse(std::string_view text) {
  DeviceModel m;
  bool have_read = false, have_write = false;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  while (std::getline(in, raw_line)) {
    std::string_view line = raw_line;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::parse_error, "expected key=value: '" + std::string(line) + "'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "read_bw_mib_s") {
      m.read_bw_mib_s = parse_double(key, value);
      have_read = true;
    } else if (key == "write_bw_mib_s") {
      m.write_bw_mib_s = parse_double(key, value);
      have_write = true;
    } else if (key == "base_latency_us") {
      m.base_latency = Nanos{static_cast<std::int64_t>(std::llround(parse_double(key, value) * 1e3))};
    } else if (key == "max_depth") {
      m.max_depth = static_cast<unsigned>(parse_uint(key, value));
    } else if (key == "write_degradation") {
      m.write_degradation.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) {
          throw Error(Errc::parse_error, "write_degradation item '" + std::string(item) + "'");
        }
        m.write_degradation.emplace_back(parse_uint(key, trim(item.substr(0, colon))),
                                         parse_double(key, trim(item.substr(colon + 1))));
      }
    } else {
      throw Error(Errc::parse_error, "unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_read || !have_write) {
    throw Error(Errc::parse_error, "read_bw_mib_s and write_bw_mib_s are required");
  }
  m.validate();
  return m;
}

DeviceModel DeviceModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::bad_file, "cannot open device model " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string DeviceModel::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "read_bw_mib_s=" << read_bw_mib_s << '\n'
     << "write_bw_mib_s=" << write_bw_mib_s << '\n'
     << "base_latency_us=" << static_cast<double>(base_latency.count()) / 1e3 << '\n'
     << "max_depth=" << max_depth << '\n'
     << "write_degradation=";
  for (std::size_t i = 0; i < write_degradation.size(); ++i) {
    if (i) os << ',';
    os << write_degradation[i].first << ':' << write_degradation[i].second;
  }
  os << '\n';
  return os.str();
}

Nanos simulated_completion_time(const DeviceModel& model, IoKind kind, std::uint64_t bytes,
                                unsigned depth) {
  if (bytes == 0) return model.base_latency;
  const double share = model.rate_bytes_per_ns(kind, bytes) / static_cast<double>(std::max(depth, 1u));
  const auto transfer = static_cast<std::int64_t>(std::ceil(static_cast<double>(bytes) / share));
  return model.base_latency + Nanos{transfer};
}

}  // namespace tasio::io
