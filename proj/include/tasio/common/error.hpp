#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tasio {

enum class Errc {
  bad_argument,
  unknown_resource,
  shut_down,
  deadlock,
  no_task_context,
  invalid_handle,
  double_resume,
  task_completed,
  illegal_increment,
  counter_underflow,
  duplicate_unregister,
  already_initialized,
  misaligned,
  bad_file,
  cyclic_graph,
  io_failure,
  parse_error,
};

std::string_view to_string(Errc code) noexcept;

/// Contract violations and unrecoverable failures across all modules.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace tasio
