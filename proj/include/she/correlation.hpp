#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "she/common.hpp"
#include "she/grid.hpp"
#include "she/quadrature.hpp"

namespace she {

enum class ModelKind { Riesz, GaussianH, Constant };

/// Spatial covariance f = h * h~ of the driving noise.
///
///  - Riesz:     f(x) = c0 |x|^-alpha, 0 < alpha < d.
///  - GaussianH: h(x) = amplitude * exp(-|x|^2 / (2 width^2)), so f is a
///               Gaussian with doubled variance.
///  - Constant:  f(x) = c, without an L^2 kernel h.
class CorrelationModel {
 public:
  static CorrelationModel riesz(int d, double alpha, double c0 = 1.0);
  static CorrelationModel gaussian_h(int d, double width, double amplitude = 1.0);
  static CorrelationModel constant(int d, double c);

  ModelKind kind() const { return kind_; }
  int dimension() const { return d_; }
  double alpha() const { return alpha_; }
  double c0() const { return c0_; }
  double width() const { return width_; }
  double amplitude() const { return amplitude_; }
  double level() const { return c_; }

  /// True for the models whose f is a bounded function.
  bool bounded() const { return kind_ != ModelKind::Riesz; }
  bool has_kernel() const { return kind_ != ModelKind::Constant; }
  std::string name() const;

  nlohmann::json to_json() const;
  static CorrelationModel from_json(const nlohmann::json& j);

 private:
  CorrelationModel() = default;
  ModelKind kind_ = ModelKind::Constant;
  int d_ = 1;
  double alpha_ = 0.0;
  double c0_ = 0.0;
  double width_ = 0.0;
  double amplitude_ = 0.0;
  double c_ = 0.0;
};

/// A value that may sit on a singularity (Riesz f at 0, Riesz f^ at 0).
struct FlaggedValue {
  double value = 0.0;
  bool singular = false;
};

/// Unit-sphere surface area |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

/// C_{d,p} = pi^{d/2} 2^{d-p} Gamma((d-p)/2) / Gamma(p/2); the Fourier
/// transform of |x|^{-p} (0 < p < d) is C_{d,d-p} |xi|^{-(d-p)}.
double riesz_constant(int d, double p);

FlaggedValue evaluate_f(const CorrelationModel& model, PointView x);
/// Radial profile of f; r > 0 for Riesz.
double f_radial(const CorrelationModel& model, double r);
/// f(0) for bounded models; Riesz throws.
double f_at_zero(const CorrelationModel& model);

FlaggedValue spectral_density(const CorrelationModel& model, PointView xi);
double spectral_radial(const CorrelationModel& model, double r);

/// h^ for models with a kernel; h^ >= 0 and |h^|^2 = f^.
double h_hat_radial(const CorrelationModel& model, double r);
FlaggedValue riesz_h_hat(const CorrelationModel& model, PointView xi);

/// Real-space kernel h (GaussianH only).
double h_real(const CorrelationModel& model, PointView x);

struct DalangResult {
  bool finite = false;
  std::optional<double> integral;
  QuadratureResult quadrature;
  std::string reason;
};

/// Dalang integral  int f^(xi) / (1 + |xi|^2) dxi  with analytic verdict.
DalangResult dalang_condition(const CorrelationModel& model, const QuadratureConfig& cfg = {});

/// (p_s * f)(0) by quadrature in the scaled radial variable.
double heat_smoothed_f_at_zero(const CorrelationModel& model, double s, double kappa,
                               const QuadratureConfig& cfg = {});
/// Closed form of the same quantity (all three kinds).
double heat_smoothed_f_at_zero_exact(const CorrelationModel& model, double s, double kappa);

/// (R_beta f)(0) = int_0^inf e^{-beta s} (p_s * f)(0) ds by nested quadrature.
double resolvent_at_zero(const CorrelationModel& model, double beta, double kappa,
                         const QuadratureConfig& cfg = {});
/// Riesz closed form:  c2 * beta^{-(2-alpha)/2} * kappa^{-alpha/2}.
double riesz_resolvent_closed_form(const CorrelationModel& model, double beta, double kappa);

struct CutoffConfig {
  double n = 1.0;
};

/// Tent window prod_j (1 - |x_j|/n)^+.
double cutoff_window(PointView x, double n);

/// h_n(x) = h(x) * window_n(x) in real space (GaussianH only).
double cutoff_kernel_hn(const CorrelationModel& model, const CutoffConfig& cfg, PointView x);

/// Kernel h sampled on the lattice (site layout). For GaussianH the closed
/// form is sampled; for Riesz it is the inverse FFT of h^ on the frequency
/// grid divided by the cell volume, with the zero mode replaced by the
/// value at the smallest nonzero frequency 2 pi / L.
std::vector<double> gridded_h(const CorrelationModel& model, const LatticeGrid& grid);
/// Gridded h_n = gridded h times the tent window.
std::vector<double> gridded_hn(const CorrelationModel& model, const LatticeGrid& grid,
                               const CutoffConfig& cfg);

/// a_t = sup_delta (delta^2/4kappa)(1 ^ 4 kappa t/delta^2) inf_{B(0,delta)} f.
double compute_a_t(const CorrelationModel& model, double t, double kappa);

/// Grid-regularized f(0): cell average of f over the cube of side dx.
/// Bounded models return f(0).
double regularize_f_at_zero(const CorrelationModel& model, double dx,
                            const QuadratureConfig& cfg = {});

}  // namespace she
