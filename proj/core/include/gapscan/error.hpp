#pragma once

#include <stdexcept>
#include <string>

namespace gapscan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Index labels or dimensions do not fit the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A computation produced non-finite values, underflowed, or degenerated.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: bad configuration, unsupported model or term.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace gapscan
