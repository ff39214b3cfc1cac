#pragma once

#include <stdexcept>
#include <string>

namespace famle {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the region a structure or domain covers.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or non-finite arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-finite values, failed bracketing).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are well formed but leave nothing to compute on
/// (singleton node sets, empty punctured balls, epsilon below the cell size).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A domain or graph violates its structural invariants.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// Configuration file errors; the message names the offending key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace famle
