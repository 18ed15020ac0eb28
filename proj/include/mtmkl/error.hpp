#pragma once

#include <stdexcept>
#include <string>

namespace mtmkl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or config value.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// The requested configuration is invalid before any compute starts
/// (C <= 0, p < 1, unsupported loss, bad task structure...).
class InfeasibleConfig : public Error {
 public:
  using Error::Error;
};

/// Non-finite objective, broken task similarity, violated positivity guard.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mtmkl
