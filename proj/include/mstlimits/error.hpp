#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mst {

enum class ErrorCode {
  invalid_parameter,
  numerical_failure,
  no_lambda2,
  insufficient_data,
  invalid_sample,
  invalid_state,
  divergent_transform,
  invalid_grid,
  grid_overflow,
  budget_exceeded,
  not_square_integrable_regime,
  uninformative_profile,
  no_witness_found,
  resonant_degeneracy,
  lattice_mismatch,
  io_error,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_parameter: return "invalid-parameter";
    case ErrorCode::numerical_failure: return "numerical-failure";
    case ErrorCode::no_lambda2: return "no-lambda2";
    case ErrorCode::insufficient_data: return "insufficient-data";
    case ErrorCode::invalid_sample: return "invalid-sample";
    case ErrorCode::invalid_state: return "invalid-state";
    case ErrorCode::divergent_transform: return "divergent-transform";
    case ErrorCode::invalid_grid: return "invalid-grid";
    case ErrorCode::grid_overflow: return "grid-overflow";
    case ErrorCode::budget_exceeded: return "budget-exceeded";
    case ErrorCode::not_square_integrable_regime: return "not-square-integrable-regime";
    case ErrorCode::uninformative_profile: return "uninformative-profile";
    case ErrorCode::no_witness_found: return "no-witness-found";
    case ErrorCode::resonant_degeneracy: return "resonant-degeneracy";
    case ErrorCode::lattice_mismatch: return "lattice-mismatch";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

// All library failures are reported through this exception; code() is stable,
// what() carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& detail) {
  if (!condition) throw Error(code, detail);
}

}  // namespace mst
