#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace she {

/// Coordinates of a point in R^d (d = 1, 2, 3 in practice).
using Point = std::vector<double>;
using PointView = std::span<const double>;

/// Raised when inputs violate a documented precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a model does not support the requested operation
/// (e.g. asking a constant covariance for its spectral density).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure: non-convergent quadrature, NaN in a trajectory, etc.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double squared_norm(PointView x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace she
