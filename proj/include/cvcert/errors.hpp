#pragma once

#include <stdexcept>
#include <string>

namespace cvcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller passed arguments that cannot describe a valid object (bad mode
/// count, index out of range, length mismatch).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numeric input data is malformed: non-finite entries, nonpositive sigma.
class InvalidData : public Error {
 public:
  using Error::Error;
};

/// The operation is defined only for block-diagonal covariance matrices
/// (zero xp block) and got one with xp correlations.
class UnsupportedShape : public Error {
 public:
  using Error::Error;
};

/// The witness standard deviation vanished, so no confidence level exists.
class DegenerateSigma : public Error {
 public:
  using Error::Error;
};

/// A matrix witness is not positive semidefinite beyond tolerance.
class InvalidWitness : public Error {
 public:
  using Error::Error;
};

/// The semidefinite solver did not reach an optimal point.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// Dataset file could not be parsed. Line and column are 1-based; zero when
/// the error is semantic rather than syntactic.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0)
      : Error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace cvcert
