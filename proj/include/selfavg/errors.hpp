#pragma once

#include <stdexcept>
#include <string>

namespace selfavg {

/// Raised when an input violates a documented precondition or schema.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a request exceeds a configured enumeration or reduction cap.
class CapacityError : public std::length_error {
 public:
  explicit CapacityError(const std::string& what) : std::length_error(what) {}
};

}  // namespace selfavg
