#pragma once

#include <stdexcept>
#include <string>

namespace levyctl {

// Bad user input: malformed config, out-of-range parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The model or cost breaks a structural assumption the solver relies on.
class AssumptionViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root finding, quadrature or series truncation did not reach tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (pole, breakpoint without side).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace levyctl
