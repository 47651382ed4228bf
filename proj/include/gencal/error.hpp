#pragma once

#include <stdexcept>
#include <string>

namespace gencal {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad sizes, values outside a domain, infeasible configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A value on or outside the domain boundary of a link or family.
class DomainError : public ValidationError {
 public:
  DomainError(const std::string& what, double value)
      : ValidationError(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// A numerical procedure failed (non-convergence, rank deficiency, divergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The problem itself has no well-defined answer (e.g. slope with constant predictor).
class IllPosedError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gencal
