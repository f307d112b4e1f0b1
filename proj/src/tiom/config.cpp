#include "tasio/tiom/config.hpp"

#include <algorithm>
#include <sstream>

#include "tasio/common/error.hpp"

namespace tasio::tiom {

std::string_view to_string(Mode m) noexcept {
  switch (m) {
    case Mode::mix: return "mix";
    case Mode::one_to_one: return "1to1";
    case Mode::fjio: return "fjio";
    case Mode::fjc: return "fjc";
  }
  return "?";
}

std::string_view to_string(Pattern p) noexcept {
  switch (p) {
    case Pattern::seq_read: return "sr";
    case Pattern::seq_write: return "sw";
    case Pattern::rand_read: return "rr";
    case Pattern::rand_write: return "rw";
  }
  return "?";
}

std::string_view to_string(Api a) noexcept {
  switch (a) {
    case Api::standalone: return "standalone";
    case Api::blocking: return "bq";
    case Api::nonblocking: return "nb";
  }
  return "?";
}

Mode parse_mode(std::string_view t) {
  if (t == "mix") return Mode::mix;
  if (t == "1to1") return Mode::one_to_one;
  if (t == "fjio") return Mode::fjio;
  if (t == "fjc") return Mode::fjc;
  throw Error(Errc::parse_error, "unknown mode '" + std::string(t) + "'");
}

Pattern parse_pattern(std::string_view t) {
  if (t == "sr") return Pattern::seq_read;
  if (t == "sw") return Pattern::seq_write;
  if (t == "rr") return Pattern::rand_read;
  if (t == "rw") return Pattern::rand_write;
  throw Error(Errc::parse_error, "unknown pattern '" + std::string(t) + "'");
}

Api parse_api(std::string_view t) {
  if (t == "standalone") return Api::standalone;
  if (t == "bq") return Api::blocking;
  if (t == "nb") return Api::nonblocking;
  throw Error(Errc::parse_error, "unknown api '" + std::string(t) + "'");
}

unsigned TiomConfig::width() const noexcept {
  return mode == Mode::fjio || mode == Mode::fjc ? 4 : 1;
}

unsigned TiomConfig::series() const noexcept {
  if (block_size == 0) return 0;
  const std::uint64_t stages = blocks() / stage_blocks();
  return static_cast<unsigned>(std::min<std::uint64_t>(max_parallel / width(), stages));
}

void TiomConfig::validate() const {
  if (block_size == 0) throw Error(Errc::bad_argument, "block size must be positive");
  if (file_size == 0 || file_size % block_size != 0) {
    throw Error(Errc::bad_argument, "block size must divide the file size");
  }
  if (blocks() % stage_blocks() != 0) {
    throw Error(Errc::bad_argument, "block count is not a multiple of the fork-join width");
  }
  if (max_parallel < width()) {
    throw Error(Errc::bad_argument, "max_parallel is smaller than one series");
  }
  if (compute_time < Nanos{0}) throw Error(Errc::bad_argument, "compute time must not be negative");
  if (time_limit <= Nanos{0}) throw Error(Errc::bad_argument, "time limit must be positive");
}

std::string TiomConfig::describe() const {
  std::ostringstream os;
  os << to_string(mode) << '/' << to_string(api) << '/' << to_string(pattern)
     << " block=" << block_size / KiB << "KiB compute=" << compute_time.count() / 1e6
     << "ms max_parallel=" << max_parallel << " file=" << file_size / MiB << "MiB seed=" << seed;
  return os.str();
}

}  // namespace tasio::tiom
