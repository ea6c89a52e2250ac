#include "rtsearch/error.hpp"

namespace rts {

std::string_view to_string(Errc code) {
  switch (code) {
  case Errc::syntax_error: return "SyntaxError";
  case Errc::missing_main: return "MissingMain";
  case Errc::unknown_identifier: return "UnknownIdentifier";
  case Errc::arity_mismatch: return "ArityMismatch";
  case Errc::duplicate_function: return "DuplicateFunction";
  case Errc::unknown_site: return "UnknownSite";
  case Errc::already_instrumented: return "AlreadyInstrumented";
  case Errc::empty_scope: return "EmptyScope";
  case Errc::bad_image: return "BadImage";
  case Errc::not_paused: return "NotPaused";
  case Errc::not_running: return "NotRunning";
  case Errc::already_started: return "AlreadyStarted";
  case Errc::no_active_query: return "NoActiveQuery";
  case Errc::session_over: return "SessionOver";
  case Errc::empty_query: return "EmptyQuery";
  case Errc::invalid_regex: return "InvalidRegex";
  case Errc::workload_fault: return "WorkloadFault";
  case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message, int line, int column) {
  std::string out(to_string(code));
  if (line > 0) {
    out += " at " + std::to_string(line);
    if (column > 0) {
      out += ":" + std::to_string(column);
    }
  }
  out += ": " + message;
  return out;
}

} // namespace

Error::Error(Errc code, const std::string& message, int line, int column)
    : std::runtime_error(decorate(code, message, line, column)), code_(code), line_(line),
      column_(column) {}

} // namespace rts
