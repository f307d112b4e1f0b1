#include "tasio/io/profile.hpp"

#include <random>
#include <unordered_map>

#include "tasio/common/error.hpp"
#include "tasio/io/file.hpp"

namespace tasio::io {

namespace {

ProfileCell profile_cell(IoContext& ctx, const FileHandle& file, std::uint64_t block, unsigned depth,
                         Nanos duration, AccessPattern pattern, IoKind kind, std::mt19937_64& rng) {
  const std::uint64_t blocks = file.size / block;
  std::uniform_int_distribution<std::uint64_t> pick(0, blocks - 1);
  std::uint64_t cursor = 0;
  auto next_offset = [&] {
    const std::uint64_t b = pattern == AccessPattern::seq ? cursor++ % blocks : pick(rng);
    return b * block;
  };

  std::vector<AlignedBuffer> buffers;
  if (!file.simulated) {
    for (unsigned i = 0; i < depth; ++i) buffers.emplace_back(block);
  }
  std::unordered_map<std::uint64_t, unsigned> slot_of;  // request id -> buffer
  Clock& clock = ctx.clock();

  auto issue = [&](unsigned slot) {
    IoRequest req;
    req.kind = kind;
    req.file = file;
    req.direct = file.direct;
    req.offset = next_offset();
    req.segments = {Segment{file.simulated ? nullptr : buffers[slot].data(), block}};
    const SubmitResult r = ctx.submit(req);
    if (std::holds_alternative<QueueFull>(r)) {
      throw Error(Errc::bad_argument, "profile depth exceeds the context capacity");
    }
    if (const auto* f = std::get_if<InFlight>(&r)) slot_of[raw(f->id)] = slot;
  };

  const Nanos start = clock.now();
  const Nanos deadline = start + duration;
  for (unsigned i = 0; i < depth; ++i) issue(i);

  std::uint64_t bytes = 0;
  Nanos last = start;
  while (!slot_of.empty()) {
    const Nanos now = clock.now();
    const Nanos left = deadline > now ? deadline - now : Nanos{0};
    WaitResult w = ctx.wait_completions(1, left);
    for (const CompletionRecord& rec : w.records) {
      const unsigned slot = slot_of.at(raw(rec.id));
      slot_of.erase(raw(rec.id));
      if (!rec.ok()) throw Error(Errc::io_failure, "profile request failed");
      if (rec.completion_time <= deadline) {
        bytes += static_cast<std::uint64_t>(rec.result);
        last = std::max(last, rec.completion_time);
        if (clock.now() < deadline) issue(slot);
      }
    }
    if (w.timed_out || clock.now() >= deadline) break;
  }
  // Drain what is still in flight; it does not count.
  while (!slot_of.empty()) {
    for (const CompletionRecord& rec : ctx.wait_completions(1, Nanos::max() / 4).records) {
      slot_of.erase(raw(rec.id));
    }
  }

  ProfileCell cell{block, depth, 0.0, bytes};
  const double secs = static_cast<double>((last - start).count()) / 1e9;
  if (secs > 0) cell.mib_s = static_cast<double>(bytes) / 1048576.0 / secs;
  return cell;
}

}  // namespace

std::vector<ProfileCell> device_profile(IoContext& ctx, const FileHandle& file,
                                        std::span<const std::uint64_t> block_sizes,
                                        std::span<const unsigned> depths, Nanos duration,
                                        AccessPattern pattern, IoKind kind, std::uint64_t seed) {
  if (duration <= Nanos{0}) throw Error(Errc::bad_argument, "profile duration must be positive");
  std::mt19937_64 rng(seed);
  std::vector<ProfileCell> table;
  for (const std::uint64_t block : block_sizes) {
    if (block == 0 || file.size < block) {
      throw Error(Errc::bad_argument, "file too small for block size " + std::to_string(block));
    }
    for (const unsigned depth : depths) {
      if (depth == 0) throw Error(Errc::bad_argument, "profile depth must be positive");
      table.push_back(profile_cell(ctx, file, block, depth, duration, pattern, kind, rng));
    }
  }
  return table;
}

}  // namespace tasio::io
