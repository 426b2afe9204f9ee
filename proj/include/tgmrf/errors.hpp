#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tgmrf {

// Bad caller input: dimensions, indices, option values.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parameters outside the mathematical domain of an operation
// (non-PD precision, out-of-bounds CAR rho, non-positive dispersion, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed or incomplete input files. `line` is 1-based, 0 when unknown.
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Numerical failure in a computation that should have succeeded.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on call order was violated (e.g. density requested before factorization).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace tgmrf
