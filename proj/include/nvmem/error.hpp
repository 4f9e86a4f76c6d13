#pragma once

#include <stdexcept>
#include <string>

namespace nvmem {

enum class ErrorCode {
  invalid_argument,
  invalid_state,
  missing_hyperfine,
  no_phase_matching,
  unsupported_sequence,
  inconsistent_inputs,
  nonphysical_inputs,
  step_size,
  budget_exceeded,
  schema_violation,
  fit_failure,
  io,
};

const char* to_string(ErrorCode code);

// All library failures are reported through this type; the CLI maps codes
// onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) fail(code, what);
}

}  // namespace nvmem
