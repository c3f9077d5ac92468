#pragma once

#include <stdexcept>
#include <string>

namespace segprune {

/// Raised when an input violates a type invariant or a precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a file cannot be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace segprune
