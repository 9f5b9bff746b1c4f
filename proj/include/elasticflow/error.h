#pragma once

#include <stdexcept>
#include <string>

#include "elasticflow/tensor.h"

namespace elasticflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by tensor ops on incompatible operands. The message names the op and
// both shapes.
class ShapeError : public Error {
 public:
  ShapeError(const std::string& op, const Shape& lhs, const Shape& rhs);
  ShapeError(const std::string& op, const std::string& detail);
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace elasticflow
