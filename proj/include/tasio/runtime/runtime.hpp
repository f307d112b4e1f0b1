#pragma once

#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "tasio/common/clock.hpp"
#include "tasio/runtime/trace.hpp"
#include "tasio/runtime/types.hpp"

namespace tasio::rt {

class RuntimeImpl;

/// Dependency-aware tasking runtime.
///
/// Tasks declare the resources they read and write; a task becomes ready once
/// every earlier conflicting task (read-after-write, write-after-read,
/// write-after-write) has completed. Ready tasks are served from one global
/// FIFO queue by `workers` execution agents.
///
/// Task bodies run on their own suspendable contexts, which gives three
/// integration points for asynchronous libraries:
///  - pause/resume: a body can give its agent back and be resumed later from
///    any context;
///  - external events: a task's completion (and therefore the release of its
///    dependents) can be held back by an event counter that outlives the body;
///  - polling services: callbacks run periodically by the runtime.
///
/// With `ClockMode::virtual_time` everything runs on the thread that calls
/// `run_to_completion`, driven by a discrete-event clock, and the resulting
/// schedule is deterministic. With `ClockMode::real` each agent is an OS thread
/// and a dedicated thread drives the polling services.
class Runtime {
 public:
  explicit Runtime(RuntimeConfig config = {});
  ~Runtime();

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const RuntimeConfig& config() const noexcept;

  ResourceId register_resource();

  TaskId spawn(std::function<void()> body, std::span<const ResourceId> reads,
               std::span<const ResourceId> writes);
  TaskId spawn(std::function<void()> body, std::initializer_list<ResourceId> reads = {},
               std::initializer_list<ResourceId> writes = {}) {
    return spawn(std::move(body), std::span<const ResourceId>(reads.begin(), reads.size()),
                 std::span<const ResourceId>(writes.begin(), writes.size()));
  }

  /// Runs until every spawned task has completed. Rethrows the first exception
  /// escaping a task body (after the remaining tasks drained).
  RunStats run_to_completion();
  bool running() const noexcept;

  /// Suspends the calling task body. `on_paused` is invoked once the body is
  /// fully suspended and receives the only handle that can resume it; it runs
  /// outside any task context and may call `resume_task` directly.
  void pause_current_task(std::function<void(ResumeHandle)> on_paused);
  void resume_task(ResumeHandle handle);

  void increase_event_counter(TaskId task, std::uint32_t n = 1);
  void decrease_event_counter(TaskId task, std::uint32_t n = 1);

  ServiceId register_polling_service(PollingService service);
  void unregister_polling_service(ServiceId id);

  TaskId current_task() const;
  bool in_task() const noexcept;

  /// Occupies the calling agent for `d`: a calibrated busy loop in real mode,
  /// an exact advance of virtual time otherwise.
  void busy_wait(Nanos d);

  Clock& clock() noexcept;

  /// Refuses further spawns.
  void shutdown();

  TaskState state(TaskId task) const;
  std::uint64_t event_count(TaskId task) const;
  std::size_t task_count() const;

  /// Task contexts that exist right now (suspended or running bodies).
  std::size_t live_contexts() const;
  std::size_t paused_tasks() const;

  std::vector<TraceRecord> trace() const;

 private:
  std::unique_ptr<RuntimeImpl> impl_;
};

}  // namespace tasio::rt
