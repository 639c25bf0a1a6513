#pragma once

#include <stdexcept>
#include <string>

namespace qavb {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A posterior too close to its Wishart boundary (nu <= D - 1) to evaluate.
class DegeneratePosteriorError : public Error {
 public:
  using Error::Error;
};

/// Floating-point breakdown: overflow, loss of definiteness, singular input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset or report file.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace qavb
