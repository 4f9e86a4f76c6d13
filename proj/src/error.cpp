#include "nvmem/error.hpp"

namespace nvmem {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_state: return "invalid-state";
    case ErrorCode::missing_hyperfine: return "missing-hyperfine";
    case ErrorCode::no_phase_matching: return "no-phase-matching";
    case ErrorCode::unsupported_sequence: return "unsupported-sequence";
    case ErrorCode::inconsistent_inputs: return "inconsistent-inputs";
    case ErrorCode::nonphysical_inputs: return "nonphysical-inputs";
    case ErrorCode::step_size: return "step-size";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::schema_violation: return "schema-violation";
    case ErrorCode::fit_failure: return "fit-failure";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace nvmem
