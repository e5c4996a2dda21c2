#pragma once

#include <stdexcept>
#include <string>

namespace coat {

/// Input data or arguments violate a documented precondition.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A node's outcome has zero variance, so the normal ML fit has no scores.
class DegenerateVariance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coat
