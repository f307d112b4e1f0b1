#include "tasio/common/error.hpp"

namespace tasio {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::bad_argument: return "bad argument";
    case Errc::unknown_resource: return "unknown resource";
    case Errc::shut_down: return "runtime shut down";
    case Errc::deadlock: return "deadlock";
    case Errc::no_task_context: return "no task context";
    case Errc::invalid_handle: return "invalid resume handle";
    case Errc::double_resume: return "double resume";
    case Errc::task_completed: return "task already completed";
    case Errc::illegal_increment: return "event increment after body exit";
    case Errc::counter_underflow: return "event counter underflow";
    case Errc::duplicate_unregister: return "duplicate unregister";
    case Errc::already_initialized: return "already initialized";
    case Errc::misaligned: return "misaligned direct request";
    case Errc::bad_file: return "invalid file handle";
    case Errc::cyclic_graph: return "cyclic graph";
    case Errc::io_failure: return "i/o failure";
    case Errc::parse_error: return "parse error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace tasio
