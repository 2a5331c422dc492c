#pragma once

#include <stdexcept>
#include <string>

namespace hopfcal {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Iteration failed to converge, or the state became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or does not satisfy an operation's preconditions.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration (schema, units, inconsistent settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The selected beam produces no antidamping, so no Hopf threshold exists.
class NoThresholdError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Data never crosses the Hopf threshold (nothing to fit).
class NotAboveThresholdError : public Error {
 public:
  using Error::Error;
};

}  // namespace hopfcal
