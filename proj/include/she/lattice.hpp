#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "she/fft.hpp"
#include "she/grid.hpp"

namespace she {

/// Gaussian density of the heat semigroup for (kappa/2) Laplacian:
/// p_t(z) = (2 pi kappa t)^{-d/2} exp(-|z|^2 / (2 kappa t)).
double heat_kernel(double t, PointView z, double kappa);

/// Scratch buffers reused across propagator / noise applications.
struct SpectralWorkspace {
  SpectralArray spec;
  SpectralArray scratch;
  explicit SpectralWorkspace(const RealFft& fft) : spec(fft.make_spectral()), scratch(fft.make_spectral()) {}
};

/// Spectral heat propagator with the continuum symbol exp(-kappa dt |xi|^2 / 2).
class HeatPropagator {
 public:
  HeatPropagator(const LatticeGrid& grid, double kappa, double dt);

  const LatticeGrid& grid() const { return fft_->grid(); }
  double kappa() const { return kappa_; }
  double dt() const { return dt_; }
  const std::vector<double>& multipliers() const { return mult_; }
  const RealFft& fft() const { return *fft_; }

  /// field <- P_dt field, in place.
  void apply(RealArray& field, SpectralWorkspace& ws) const;
  /// Multiply a spectrum by the symbol.
  void apply_spectral(SpectralArray& spec) const;

 private:
  std::shared_ptr<const RealFft> fft_;
  double kappa_;
  double dt_;
  std::vector<double> mult_;
};

RealArray apply_propagator(const RealArray& field, const HeatPropagator& prop);

/// min_l |x_l - y_l|; with a period the per-axis distance is the torus one.
double d_separation(PointView x, PointView y, std::optional<double> period = std::nullopt);

/// Euclidean torus distance.
double torus_distance(PointView x, PointView y, double period);

}  // namespace she
