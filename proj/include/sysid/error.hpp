#pragma once

#include <stdexcept>
#include <string>

namespace sysid {

/// Base of every error thrown by the library. The CLI maps subclasses to
/// exit codes (usage 1, numeric/regime 2, I/O 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: wrong shapes, out-of-range parameters, bad config.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// A numerical procedure failed or a quantity left the representable range.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Simulation would leave double range; callers should switch to the
/// scaled pipeline.
class OverflowError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// The request is well-formed but the system is outside the regime where the
/// requested quantity is defined (e.g. bounds for an irregular explosive A).
class RegimeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sysid
