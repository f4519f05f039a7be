#pragma once

#include <stdexcept>
#include <string>

namespace handsoff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (JSON or CSV syntax, missing keys).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed input that violates a domain invariant. `field()` names the
/// offending entry.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// The steering task cannot be met within the horizon.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A numerical kernel produced non-finite values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace handsoff
