#include "she/quadrature.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <limits>

namespace she {

namespace {

boost::math::quadrature::tanh_sinh<double>& integrator() {
  thread_local boost::math::quadrature::tanh_sinh<double> q(15);
  return q;
}

}  // namespace

QuadratureResult integrate_finite(const std::function<double(double)>& g, double a, double b,
                                  const QuadratureConfig& cfg) {
  QuadratureResult out;
  if (a == b) return out;
  double err = 0.0, l1 = 0.0;
  std::size_t levels = 0;
  auto safe = [&](double x) {
    double v = g(x);
    return std::isfinite(v) ? v : 0.0;
  };
  try {
    out.value = integrator().integrate(safe, a, b, cfg.rel_tol * 1e-3, &err, &l1, &levels);
    out.error = err;
  } catch (const std::exception&) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.error = std::numeric_limits<double>::infinity();
  }
  out.converged = std::isfinite(out.value) &&
                  out.error <= std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(out.value));
  return out;
}

QuadratureResult integrate_half_line(const std::function<double(double)>& g,
                                     const QuadratureConfig& cfg, double split) {
  QuadratureResult head = integrate_finite(g, 0.0, split, cfg);
  auto tail_map = [&](double s) {
    if (s <= 0.0) return 0.0;
    double r = split / s;
    return g(r) * split / (s * s);
  };
  QuadratureResult tail = integrate_finite(tail_map, 0.0, 1.0, cfg);
  QuadratureResult out;
  out.value = head.value + tail.value;
  out.error = head.error + tail.error;
  out.converged = std::isfinite(out.value) &&
                  out.error <= std::max(cfg.abs_tol, cfg.rel_tol * std::fabs(out.value));
  return out;
}

}  // namespace she
