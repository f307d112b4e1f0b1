#include "tasio/tiom/benchmark.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <cstring>
#include <random>

#include "tasio/common/error.hpp"
#include "tasio/io/file.hpp"

namespace tasio::tiom {

void compute_kernel(rt::Runtime& runtime, Nanos d) { runtime.busy_wait(d); }

void fill_block(std::byte* data, std::size_t length, std::uint64_t seed, std::uint64_t block) {
  std::mt19937_64 rng(seed ^ (block * 0x9E3779B97F4A7C15ULL));
  std::size_t i = 0;
  for (; i + 8 <= length; i += 8) {
    const std::uint64_t v = rng();
    std::memcpy(data + i, &v, 8);
  }
  if (i < length) {
    const std::uint64_t v = rng();
    std::memcpy(data + i, &v, length - i);
  }
}

namespace {

std::int64_t standalone_io(const BenchTargets& tg, const io::IoRequest& req, rt::Runtime& runtime,
                           Nanos retry) {
  if (!tg.file.simulated) return io::perform_now(req);
  if (tg.standalone == nullptr) throw Error(Errc::bad_argument, "standalone run needs an I/O context");
  for (;;) {
    const io::SubmitResult r = tg.standalone->submit(req);
    if (const auto* c = std::get_if<io::Completed>(&r)) return c->result;
    if (const auto* f = std::get_if<io::InFlight>(&r)) return tg.standalone->wait_request(f->id).result;
    runtime.clock().sleep_for(retry);
  }
}

}  // namespace

BenchResult run_benchmark(const TiomConfig& cfg, rt::Runtime& runtime, const BenchTargets& tg) {
  const TaskGraph graph = build_task_graph(cfg);
  if (cfg.api != Api::standalone && tg.tasio == nullptr) {
    throw Error(Errc::bad_argument, "bq/nb runs need the task-aware I/O layer");
  }
  if (tg.file.size < cfg.file_size) throw Error(Errc::bad_argument, "benchmark file is too small");

  const bool write = is_write(cfg.pattern);
  const io::IoKind kind = write ? io::IoKind::write : io::IoKind::read;

  // Real files need buffers: one per series and fan slot.
  std::vector<io::AlignedBuffer> buffers;
  if (!tg.file.simulated) {
    buffers.reserve(static_cast<std::size_t>(graph.series) * cfg.width());
    for (std::size_t i = 0; i < static_cast<std::size_t>(graph.series) * cfg.width(); ++i) {
      buffers.emplace_back(cfg.block_size);
    }
  }

  std::vector<std::int64_t> results(graph.slices.size(), 0);
  std::vector<IoResult> slots(cfg.api == Api::nonblocking ? graph.slices.size() : 0);
  std::atomic<bool> cut_off{false};
  std::atomic<bool> failed{false};
  Nanos deadline{0};

  std::vector<rt::ResourceId> series_res;
  for (unsigned s = 0; s < graph.series; ++s) series_res.push_back(runtime.register_resource());

  auto do_io = [&](const TaskSpec& spec) {
    const IoSlice& slice = graph.slices[spec.io_index];
    std::byte* buf = nullptr;
    if (!buffers.empty()) {
      buf = buffers[static_cast<std::size_t>(spec.series) * cfg.width() + spec.slot].data();
      if (write) fill_block(buf, slice.length, cfg.seed, slice.offset / cfg.block_size);
    }
    const auto off = static_cast<off_t>(slice.offset);
    std::int64_t r = 0;
    switch (cfg.api) {
      case Api::standalone: {
        io::IoRequest req;
        req.kind = kind;
        req.file = tg.file;
        req.direct = tg.file.direct;
        req.offset = slice.offset;
        req.segments = {io::Segment{buf, slice.length}};
        req.validate();
        r = standalone_io(tg, req, runtime, tg.tasio ? tg.tasio->config().retry_sleep
                                                     : std::chrono::milliseconds(1));
        break;
      }
      case Api::blocking: {
        const ssize_t n = write ? tg.tasio->pwrite(tg.file, buf, slice.length, off)
                                : tg.tasio->pread(tg.file, buf, slice.length, off);
        r = n < 0 ? -static_cast<std::int64_t>(errno) : n;
        break;
      }
      case Api::nonblocking:
        if (write) {
          tg.tasio->ta_pwrite(tg.file, buf, slice.length, off, &slots[spec.io_index]);
        } else {
          tg.tasio->ta_pread(tg.file, buf, slice.length, off, &slots[spec.io_index]);
        }
        return;
    }
    results[spec.io_index] = r;
    if (r < 0) failed.store(true);
  };

  for (const TaskSpec& spec : graph.tasks) {
    auto body = [&, spec_ptr = &spec] {
      if (failed.load(std::memory_order_relaxed)) return;
      if (runtime.clock().now() >= deadline) {
        cut_off.store(true, std::memory_order_relaxed);
        return;
      }
      compute_kernel(runtime, spec_ptr->compute);
      if (spec_ptr->io_index != kNoBlock) do_io(*spec_ptr);
    };
    const rt::ResourceId s = series_res[spec.series];
    // Fan stages read the series resource; the task closing a stage writes it.
    const bool reader = (cfg.mode == Mode::fjio && spec.kind == TaskKind::io) ||
                        (cfg.mode == Mode::fjc && spec.kind == TaskKind::compute);
    if (reader) {
      runtime.spawn(std::move(body), {s}, {});
    } else {
      runtime.spawn(std::move(body), {}, {s});
    }
  }

  deadline = runtime.clock().now() + cfg.time_limit;
  const rt::RunStats stats = runtime.run_to_completion();

  BenchResult out;
  out.elapsed = stats.elapsed;
  out.tasks_executed = stats.tasks_executed;
  out.completed_fully = !cut_off.load();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    results[i] = slots[i].done ? slots[i].result : 0;
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i] < 0) {
      throw Error(Errc::io_failure, "I/O task " + std::to_string(i) + " failed: " +
                                        std::strerror(static_cast<int>(-results[i])));
    }
    out.bytes += static_cast<std::uint64_t>(results[i]);
  }
  const double secs = out.elapsed_s();
  out.bandwidth_mib_s = secs > 0 ? static_cast<double>(out.bytes) / static_cast<double>(MiB) / secs : 0.0;
  if (tg.record_calls) out.call_results = std::move(results);
  return out;
}

BenchResult run_tiom(const TiomConfig& cfg, const Platform& p) {
  cfg.validate();
  if (p.clock == rt::ClockMode::virtual_time && p.backend == io::Backend::pool) {
    throw Error(Errc::bad_argument, "the pool backend performs real I/O and needs the real clock");
  }
  rt::RuntimeConfig rc;
  rc.workers = p.workers;
  rc.clock = p.clock;
  rc.poll_period = p.poll_period;
  rc.trace = p.trace;
  rt::Runtime runtime(rc);

  std::filesystem::path path;
  bool temporary = false;
  io::File file = io::File::simulated(cfg.file_size);
  if (p.backend == io::Backend::pool) {
    path = p.file_path;
    if (path.empty()) {
      std::string tmpl = (std::filesystem::temp_directory_path() / "tiom-XXXXXX").string();
      const int fd = ::mkstemp(tmpl.data());
      if (fd < 0) throw Error(Errc::io_failure, "cannot create a temporary benchmark file");
      ::close(fd);
      path = tmpl;
      temporary = true;
    }
    file = io::File::open(path, {.create = true, .truncate = true, .direct = p.direct, .read_only = false});
    file.preallocate(cfg.file_size);
  }

  BenchResult result;
  try {
    BenchTargets tg;
    tg.file = file.handle();
    tg.record_calls = p.record_calls;
    std::unique_ptr<TaskAwareIo> tasio;
    std::unique_ptr<io::IoContext> standalone;
    if (cfg.api == Api::standalone) {
      if (p.backend == io::Backend::simulated) {
        io::IoContextOptions opts;
        opts.capacity = std::max<std::size_t>(p.max_in_flight, cfg.max_parallel);
        opts.model = p.model;
        standalone = std::make_unique<io::IoContext>(std::move(opts), runtime.clock());
        tg.standalone = standalone.get();
      }
    } else {
      TasioConfig tc;
      tc.max_in_flight = p.max_in_flight;
      tc.retry_sleep = p.retry_sleep;
      tc.backend = p.backend;
      tc.model = p.model;
      tc.pool_workers = p.pool_workers;
      tc.read_env = p.read_env;
      tasio = std::make_unique<TaskAwareIo>(runtime, tc);
      tg.tasio = tasio.get();
    }
    result = run_benchmark(cfg, runtime, tg);
    if (tasio) tasio->shutdown();
  } catch (...) {
    if (temporary) std::filesystem::remove(path);
    throw;
  }
  file.close();
  if (!path.empty()) {
    if (p.digest) result.file_digest = io::file_digest(path);
    if (temporary) std::filesystem::remove(path);
  }
  return result;
}

}  // namespace tasio::tiom
