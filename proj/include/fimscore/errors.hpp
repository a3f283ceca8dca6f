#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fimscore {

/// Base of every error raised by the library. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (lgamma(0), negative noise, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(std::size_t pivot, double magnitude)
      : Error("singular matrix: pivot " + std::to_string(pivot) + " has magnitude " +
              std::to_string(magnitude)),
        pivot_(pivot) {}

  std::size_t pivot() const { return pivot_; }

 private:
  std::size_t pivot_;
};

/// Transform evaluated where its Jacobian vanishes (e.g. a gray RGB pixel).
class SingularTransformError : public Error {
 public:
  using Error::Error;
};

/// A function evaluation (likelihood, gradient, loss) produced NaN or infinity.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fimscore
