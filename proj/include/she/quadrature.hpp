#pragma once

#include <functional>

namespace she {

struct QuadratureConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

/// Adaptive double-exponential quadrature on [a, b]; integrable endpoint
/// singularities are fine.
QuadratureResult integrate_finite(const std::function<double(double)>& g, double a, double b,
                                  const QuadratureConfig& cfg = {});

/// Quadrature on [0, inf), split at `split` with the tail mapped onto
/// (0, 1] through r = split / s.
QuadratureResult integrate_half_line(const std::function<double(double)>& g,
                                     const QuadratureConfig& cfg = {}, double split = 1.0);

}  // namespace she
