#pragma once

#include <stdexcept>
#include <string>

namespace mtomo {

/// Input violates a documented precondition (CLI exit code 2).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Eigenvalue or argument outside the domain of a matrix function.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Prediction or inversion is undefined for the supplied values.
class DegenerateInputError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A required Pauli mean was not supplied.
class IncompleteDataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Measurement record admits no finite MaxEnt multipliers (CLI exit code 3).
class InfeasibleRecordError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Calibration matrix cannot be inverted reliably.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(int line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace mtomo
