#pragma once

#include <stdexcept>
#include <string>

namespace semtrack {

// Bad input or configuration. The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem and codec failures. The CLI maps these to exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or parameter shapes that do not fit together.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace semtrack
