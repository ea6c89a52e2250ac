#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rts {

enum class Errc {
  syntax_error,
  missing_main,
  unknown_identifier,
  arity_mismatch,
  duplicate_function,
  unknown_site,
  already_instrumented,
  empty_scope,
  bad_image,
  not_paused,
  not_running,
  already_started,
  no_active_query,
  session_over,
  empty_query,
  invalid_regex,
  workload_fault,
  io_error,
};

std::string_view to_string(Errc code);

// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message, int line = 0, int column = 0);

  Errc code() const noexcept { return code_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

private:
  Errc code_;
  int line_;
  int column_;
};

} // namespace rts
