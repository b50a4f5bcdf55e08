#pragma once

#include <stdexcept>
#include <string>

namespace icesar {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, CSV, model files).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Shapes that do not agree: band lengths, tensor shapes, feature counts.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace icesar
