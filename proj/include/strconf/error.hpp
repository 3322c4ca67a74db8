#pragma once

#include <stdexcept>
#include <string>

namespace strconf {

/// Bad input: malformed files, violated preconditions, mismatched shapes.
/// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A well-formed input on which a computation could not complete.
/// The CLI maps this to exit code 2.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace strconf
