#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "tasio/common/clock.hpp"

namespace tasio::tiom {

enum class Mode : std::uint8_t { mix, one_to_one, fjio, fjc };
enum class Pattern : std::uint8_t { seq_read, seq_write, rand_read, rand_write };
enum class Api : std::uint8_t { standalone, blocking, nonblocking };

std::string_view to_string(Mode m) noexcept;     // mix, 1to1, fjio, fjc
std::string_view to_string(Pattern p) noexcept;  // sr, sw, rr, rw
std::string_view to_string(Api a) noexcept;      // standalone, bq, nb
Mode parse_mode(std::string_view text);
Pattern parse_pattern(std::string_view text);
Api parse_api(std::string_view text);

constexpr bool is_write(Pattern p) noexcept {
  return p == Pattern::seq_write || p == Pattern::rand_write;
}
constexpr bool is_random(Pattern p) noexcept {
  return p == Pattern::rand_read || p == Pattern::rand_write;
}

inline constexpr std::uint64_t KiB = 1024;
inline constexpr std::uint64_t MiB = 1024 * KiB;

/// One benchmark run.
struct TiomConfig {
  Mode mode = Mode::mix;
  std::uint64_t block_size = 64 * KiB;
  Nanos compute_time = std::chrono::milliseconds(1);
  Pattern pattern = Pattern::seq_read;
  unsigned max_parallel = 128;
  std::uint64_t file_size = 64 * MiB;
  Api api = Api::standalone;
  Nanos time_limit = std::chrono::seconds(60);
  std::uint64_t seed = 1;

  std::uint64_t blocks() const noexcept { return file_size / block_size; }
  /// Tasks of one series that may run side by side.
  unsigned width() const noexcept;
  /// Blocks that form one indivisible stage of a series.
  unsigned stage_blocks() const noexcept { return mode == Mode::fjio ? 4 : 1; }
  unsigned series() const noexcept;

  /// Throws `Errc::bad_argument` when the run cannot be built.
  void validate() const;
  std::string describe() const;
};

}  // namespace tasio::tiom
