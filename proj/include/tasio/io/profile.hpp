#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tasio/io/io_context.hpp"

namespace tasio::io {

enum class AccessPattern : std::uint8_t { seq, rand };

struct ProfileCell {
  std::uint64_t block_size = 0;  // bytes
  unsigned depth = 0;
  double mib_s = 0.0;
  std::uint64_t bytes = 0;
};

/// fio-style throughput measurement: for every (block size, depth) cell keep
/// `depth` requests in flight against `file` for `duration` and report the
/// sustained rate over the completions that landed inside the window.
std::vector<ProfileCell> device_profile(IoContext& ctx, const FileHandle& file,
                                        std::span<const std::uint64_t> block_sizes,
                                        std::span<const unsigned> depths, Nanos duration,
                                        AccessPattern pattern, IoKind kind, std::uint64_t seed = 1);

}  // namespace tasio::io
