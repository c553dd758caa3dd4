#include "she/lattice.hpp"

#include <cmath>
#include <numbers>

namespace she {

double heat_kernel(double t, PointView z, double kappa) {
  if (!(t > 0.0)) throw DomainError("heat kernel requires t > 0");
  if (!(kappa > 0.0)) throw DomainError("heat kernel requires kappa > 0");
  const double var = kappa * t;
  const double d = static_cast<double>(z.size());
  return std::pow(2.0 * std::numbers::pi * var, -0.5 * d) * std::exp(-squared_norm(z) / (2.0 * var));
}

HeatPropagator::HeatPropagator(const LatticeGrid& grid, double kappa, double dt)
    : fft_(fft_for(grid)), kappa_(kappa), dt_(dt) {
  if (!(kappa > 0.0)) throw DomainError("propagator requires kappa > 0");
  if (!(dt >= 0.0)) throw DomainError("propagator requires dt >= 0");
  mult_.resize(grid.spectral_size());
  for (std::size_t k = 0; k < mult_.size(); ++k)
    mult_[k] = std::exp(-0.5 * kappa * dt * grid.mode_wavenumber_sq(k));
}

void HeatPropagator::apply_spectral(SpectralArray& spec) const {
  if (spec.size() != mult_.size()) throw DomainError("propagator: spectrum size mismatch");
  for (std::size_t k = 0; k < mult_.size(); ++k) spec[k] *= mult_[k];
}

void HeatPropagator::apply(RealArray& field, SpectralWorkspace& ws) const {
  if (field.size() != grid().sites()) throw DomainError("propagator: field size does not match grid");
  fft_->forward(field, ws.spec);
  apply_spectral(ws.spec);
  fft_->inverse(ws.spec, field, ws.scratch);
}

RealArray apply_propagator(const RealArray& field, const HeatPropagator& prop) {
  RealArray out = field;
  SpectralWorkspace ws(prop.fft());
  prop.apply(out, ws);
  return out;
}

namespace {
double axis_gap(double a, double b, std::optional<double> period) {
  double g = std::fabs(a - b);
  if (period) {
    g = std::fmod(g, *period);
    g = std::min(g, *period - g);
  }
  return g;
}
}  // namespace

double d_separation(PointView x, PointView y, std::optional<double> period) {
  if (x.size() != y.size() || x.empty()) throw DomainError("d_separation: dimension mismatch");
  double best = axis_gap(x[0], y[0], period);
  for (std::size_t l = 1; l < x.size(); ++l) best = std::min(best, axis_gap(x[l], y[l], period));
  return best;
}

double torus_distance(PointView x, PointView y, double period) {
  if (x.size() != y.size()) throw DomainError("torus_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t l = 0; l < x.size(); ++l) {
    double g = axis_gap(x[l], y[l], period);
    s += g * g;
  }
  return std::sqrt(s);
}

}  // namespace she
