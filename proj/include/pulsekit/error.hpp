#pragma once

#include <stdexcept>
#include <string>

namespace pulsekit {

// Shape or argument contract violated by the caller.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data cannot be processed (missing files, malformed formats,
// degenerate clips).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateClipError : public DataError {
 public:
  using DataError::DataError;
};

// NaN/Inf or otherwise undefined numeric result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pulsekit
