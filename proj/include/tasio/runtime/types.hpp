#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

#include "tasio/common/clock.hpp"

namespace tasio::rt {

enum class TaskId : std::uint64_t {};
enum class ResourceId : std::uint64_t {};
enum class ServiceId : std::uint64_t {};

constexpr std::uint64_t raw(TaskId id) noexcept { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t raw(ResourceId id) noexcept { return static_cast<std::uint64_t>(id); }
constexpr std::uint64_t raw(ServiceId id) noexcept { return static_cast<std::uint64_t>(id); }

enum class TaskState : std::uint8_t {
  created,
  ready,
  running,
  paused,
  events_pending,
  completed,
};

std::string_view to_string(TaskState s) noexcept;

enum class ClockMode { real, virtual_time };

struct RuntimeConfig {
  unsigned workers = 1;
  ClockMode clock = ClockMode::real;
  Nanos poll_period = std::chrono::microseconds(100);
  bool trace = false;
  // Virtual mode only: abort with a deadlock error when simulated time moves
  // this far without any task changing state.
  Nanos stall_limit = std::chrono::minutes(10);

  void validate() const;
};

struct RunStats {
  Nanos elapsed{0};
  std::uint64_t tasks_executed = 0;
};

/// One-shot capability to make a paused task runnable again.
class ResumeHandle {
 public:
  ResumeHandle() = default;

  TaskId task() const noexcept { return task_; }
  std::uint64_t token() const noexcept { return token_; }

 private:
  friend class RuntimeImpl;
  ResumeHandle(TaskId task, std::uint64_t token) : task_(task), token_(token) {}

  TaskId task_{0};
  std::uint64_t token_ = 0;
};

struct PollingService {
  std::string name;
  // Returns the number of progress events it handled.
  std::function<std::size_t()> callback;
  Nanos period_hint = std::chrono::microseconds(100);
};

}  // namespace tasio::rt
