#pragma once

#include <stdexcept>
#include <string>

namespace cbp {

enum class ErrorCode {
  invalid_argument,
  trivial_mechanism,
  not_critical,
  grey_condition_fails,
  indeterminate,
  boundary_case,
  not_regularly_varying,
  quadrature_failure,
  bracketing_failure,
  underflow,
  inversion_failure,
  too_few_survivors,
  config,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::trivial_mechanism: return "trivial mechanism";
    case ErrorCode::not_critical: return "mechanism is not critical";
    case ErrorCode::grey_condition_fails: return "Grey's condition fails";
    case ErrorCode::indeterminate: return "indeterminate";
    case ErrorCode::boundary_case: return "boundary case";
    case ErrorCode::not_regularly_varying: return "not regularly varying (numerically)";
    case ErrorCode::quadrature_failure: return "quadrature failure";
    case ErrorCode::bracketing_failure: return "bracketing failure";
    case ErrorCode::underflow: return "underflow";
    case ErrorCode::inversion_failure: return "inversion failure";
    case ErrorCode::too_few_survivors: return "too few survivors";
    case ErrorCode::config: return "config error";
  }
  return "unknown";
}

//! Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::invalid_argument) {
  if (!cond) throw Error(code, what);
}

}  // namespace cbp
