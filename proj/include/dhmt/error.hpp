#pragma once

#include <stdexcept>
#include <string>

namespace dhmt {

enum class ErrorKind {
  domain_violation,
  not_positive_definite,
  torsion_not_skew,
  invalid_argument,
  incompatible_mode,
  precondition,
  size_overflow,
  non_convergence,
  ambiguous_kernel,
  config,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain_violation: return "domain-violation";
    case ErrorKind::not_positive_definite: return "metric-not-positive-definite";
    case ErrorKind::torsion_not_skew: return "torsion-skewness";
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::incompatible_mode: return "incompatible-mode";
    case ErrorKind::precondition: return "real-valuedness-precondition";
    case ErrorKind::size_overflow: return "size-overflow";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::ambiguous_kernel: return "ambiguous-kernel";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dhmt
