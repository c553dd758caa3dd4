#include "she/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "she/fft.hpp"

namespace she {

namespace {

constexpr double kPi = std::numbers::pi;

void require_dimension(int d) {
  if (d < 1 || d > 3) throw DomainError("correlation model dimension must be 1, 2 or 3");
}

void require_finite_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive");
}

void require_point(const CorrelationModel& m, PointView x) {
  if (static_cast<int>(x.size()) != m.dimension())
    throw DomainError("point dimension does not match model dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("point has non-finite coordinates");
}

// Gaussian f = h * h~ for h = a exp(-|x|^2 / 2w^2).
double gaussian_f0(const CorrelationModel& m) {
  return m.amplitude() * m.amplitude() * std::pow(kPi * m.width() * m.width(), 0.5 * m.dimension());
}

}  // namespace

CorrelationModel CorrelationModel::riesz(int d, double alpha, double c0) {
  require_dimension(d);
  if (!(alpha > 0.0 && alpha < d)) throw DomainError("Riesz exponent alpha must lie in (0, d)");
  require_finite_positive(c0, "Riesz amplitude c0");
  CorrelationModel m;
  m.kind_ = ModelKind::Riesz;
  m.d_ = d;
  m.alpha_ = alpha;
  m.c0_ = c0;
  return m;
}

CorrelationModel CorrelationModel::gaussian_h(int d, double width, double amplitude) {
  require_dimension(d);
  require_finite_positive(width, "Gaussian kernel width");
  require_finite_positive(amplitude, "Gaussian kernel amplitude");
  CorrelationModel m;
  m.kind_ = ModelKind::GaussianH;
  m.d_ = d;
  m.width_ = width;
  m.amplitude_ = amplitude;
  return m;
}

CorrelationModel CorrelationModel::constant(int d, double c) {
  require_dimension(d);
  if (!(c >= 0.0) || !std::isfinite(c)) throw DomainError("constant covariance level must be >= 0");
  CorrelationModel m;
  m.kind_ = ModelKind::Constant;
  m.d_ = d;
  m.c_ = c;
  return m;
}

std::string CorrelationModel::name() const {
  switch (kind_) {
    case ModelKind::Riesz: return "riesz";
    case ModelKind::GaussianH: return "gaussian_h";
    case ModelKind::Constant: return "constant";
  }
  return "unknown";
}

nlohmann::json CorrelationModel::to_json() const {
  nlohmann::json j{{"kind", name()}, {"d", d_}};
  switch (kind_) {
    case ModelKind::Riesz:
      j["alpha"] = alpha_;
      j["c0"] = c0_;
      break;
    case ModelKind::GaussianH:
      j["width"] = width_;
      j["amplitude"] = amplitude_;
      break;
    case ModelKind::Constant:
      j["c"] = c_;
      break;
  }
  return j;
}

CorrelationModel CorrelationModel::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("model must be a JSON object");
  if (!j.contains("kind") || !j["kind"].is_string()) throw DomainError("model needs a string 'kind'");
  if (!j.contains("d") || !j["d"].is_number_integer()) throw DomainError("model needs an integer 'd'");
  auto num = [&](const char* key, std::optional<double> fallback) {
    if (j.contains(key)) {
      if (!j[key].is_number()) throw DomainError(std::string("model field '") + key + "' must be a number");
      return j[key].get<double>();
    }
    if (!fallback) throw DomainError(std::string("model missing '") + key + "'");
    return *fallback;
  };
  const std::string kind = j["kind"].get<std::string>();
  const int d = j["d"].get<int>();
  if (kind == "riesz") return riesz(d, num("alpha", std::nullopt), num("c0", 1.0));
  if (kind == "gaussian_h") return gaussian_h(d, num("width", std::nullopt), num("amplitude", 1.0));
  if (kind == "constant") return constant(d, num("c", std::nullopt));
  throw DomainError("unknown model kind '" + kind + "'");
}

double sphere_area(int d) { return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d); }

double riesz_constant(int d, double p) {
  return std::pow(kPi, 0.5 * d) * std::pow(2.0, d - p) * std::tgamma(0.5 * (d - p)) /
         std::tgamma(0.5 * p);
}

double f_radial(const CorrelationModel& m, double r) {
  switch (m.kind()) {
    case ModelKind::Riesz:
      if (r <= 0.0) return std::numeric_limits<double>::infinity();
      return m.c0() * std::pow(r, -m.alpha());
    case ModelKind::GaussianH:
      return gaussian_f0(m) * std::exp(-r * r / (4.0 * m.width() * m.width()));
    case ModelKind::Constant:
      return m.level();
  }
  return 0.0;
}

FlaggedValue evaluate_f(const CorrelationModel& m, PointView x) {
  require_point(m, x);
  double r = std::sqrt(squared_norm(x));
  if (m.kind() == ModelKind::Riesz && r == 0.0)
    return {std::numeric_limits<double>::infinity(), true};
  return {f_radial(m, r), false};
}

double f_at_zero(const CorrelationModel& m) {
  if (!m.bounded()) throw UnsupportedError("Riesz f is singular at 0; use regularize_f_at_zero");
  return f_radial(m, 0.0);
}

double spectral_radial(const CorrelationModel& m, double r) {
  switch (m.kind()) {
    case ModelKind::Riesz:
      if (r <= 0.0) return std::numeric_limits<double>::infinity();
      return m.c0() * riesz_constant(m.dimension(), m.alpha()) * std::pow(r, m.alpha() - m.dimension());
    case ModelKind::GaussianH: {
      double w2 = m.width() * m.width();
      return m.amplitude() * m.amplitude() * std::pow(2.0 * kPi * w2, m.dimension()) *
             std::exp(-w2 * r * r);
    }
    case ModelKind::Constant:
      throw UnsupportedError("constant covariance has no spectral density");
  }
  return 0.0;
}

FlaggedValue spectral_density(const CorrelationModel& m, PointView xi) {
  require_point(m, xi);
  double r = std::sqrt(squared_norm(xi));
  if (m.kind() == ModelKind::Constant) throw UnsupportedError("constant covariance has no spectral density");
  if (m.kind() == ModelKind::Riesz && r == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {spectral_radial(m, r), false};
}

double h_hat_radial(const CorrelationModel& m, double r) {
  switch (m.kind()) {
    case ModelKind::Riesz:
      return std::sqrt(spectral_radial(m, r));
    case ModelKind::GaussianH: {
      double w2 = m.width() * m.width();
      return m.amplitude() * std::pow(2.0 * kPi * w2, 0.5 * m.dimension()) * std::exp(-0.5 * w2 * r * r);
    }
    case ModelKind::Constant:
      throw UnsupportedError("constant covariance has no kernel h");
  }
  return 0.0;
}

FlaggedValue riesz_h_hat(const CorrelationModel& m, PointView xi) {
  if (m.kind() != ModelKind::Riesz) throw UnsupportedError("riesz_h_hat requires a Riesz model");
  FlaggedValue f = spectral_density(m, xi);
  return {std::sqrt(f.value), f.singular};
}

double h_real(const CorrelationModel& m, PointView x) {
  if (m.kind() != ModelKind::GaussianH)
    throw UnsupportedError("real-space h is only available for the Gaussian kernel");
  require_point(m, x);
  return m.amplitude() * std::exp(-squared_norm(x) / (2.0 * m.width() * m.width()));
}

DalangResult dalang_condition(const CorrelationModel& m, const QuadratureConfig& cfg) {
  DalangResult out;
  const int d = m.dimension();
  switch (m.kind()) {
    case ModelKind::Riesz: {
      if (!(m.alpha() < std::min(d, 2))) {
        out.finite = false;
        out.reason = "Riesz exponent alpha must satisfy alpha < min(d, 2); integrand decays like |xi|^(alpha-3)";
        out.quadrature.converged = false;
        return out;
      }
      // Radial integrand |S^{d-1}| f^(r) r^{d-1} / (1 + r^2).
      const double pref = sphere_area(d) * m.c0() * riesz_constant(d, m.alpha());
      const double a = m.alpha();
      out.quadrature = integrate_half_line(
          [&](double r) { return r <= 0.0 ? 0.0 : pref * std::pow(r, a - 1.0) / (1.0 + r * r); }, cfg);
      break;
    }
    case ModelKind::GaussianH: {
      const double s = sphere_area(d);
      out.quadrature = integrate_half_line(
          [&](double r) { return s * spectral_radial(m, r) * std::pow(r, d - 1) / (1.0 + r * r); }, cfg);
      break;
    }
    case ModelKind::Constant:
      // f^ = c (2 pi)^d delta_0.
      out.quadrature.value = m.level() * std::pow(2.0 * kPi, d);
      out.quadrature.converged = true;
      break;
  }
  out.finite = true;
  out.integral = out.quadrature.value;
  if (!out.quadrature.converged) out.reason = "quadrature did not reach tolerance; value is partial";
  return out;
}

double heat_smoothed_f_at_zero_exact(const CorrelationModel& m, double s, double kappa) {
  require_finite_positive(s, "time s");
  require_finite_positive(kappa, "viscosity kappa");
  const int d = m.dimension();
  switch (m.kind()) {
    case ModelKind::Riesz:
      return m.c0() * std::pow(kappa * s, -0.5 * m.alpha()) * std::pow(2.0, -0.5 * m.alpha()) *
             std::tgamma(0.5 * (d - m.alpha())) / std::tgamma(0.5 * d);
    case ModelKind::GaussianH:
      return gaussian_f0(m) * std::pow(1.0 + kappa * s / (2.0 * m.width() * m.width()), -0.5 * d);
    case ModelKind::Constant:
      return m.level();
  }
  return 0.0;
}

double heat_smoothed_f_at_zero(const CorrelationModel& m, double s, double kappa,
                               const QuadratureConfig& cfg) {
  require_finite_positive(s, "time s");
  require_finite_positive(kappa, "viscosity kappa");
  if (m.kind() == ModelKind::Constant) return m.level();
  const int d = m.dimension();
  const double scale = std::sqrt(kappa * s);
  const double pref = sphere_area(d) * std::pow(2.0 * kPi, -0.5 * d);
  // z = sqrt(kappa s) rho turns p_s(z) dz into the standard Gaussian in rho.
  auto g = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    return pref * std::exp(-0.5 * rho * rho) * f_radial(m, scale * rho) * std::pow(rho, d - 1);
  };
  QuadratureResult q = integrate_half_line(g, cfg, 1.0);
  if (!q.converged) throw NumericalError("heat-smoothed correlation quadrature did not converge");
  return q.value;
}

double resolvent_at_zero(const CorrelationModel& m, double beta, double kappa,
                         const QuadratureConfig& cfg) {
  require_finite_positive(beta, "resolvent rate beta");
  require_finite_positive(kappa, "viscosity kappa");
  DalangResult dal = dalang_condition(m, cfg);
  if (!dal.finite) throw DomainError("resolvent diverges: Dalang condition fails (" + dal.reason + ")");
  if (m.kind() == ModelKind::Constant) return m.level() / beta;
  QuadratureConfig inner = cfg;
  inner.rel_tol = cfg.rel_tol * 1e-2;
  inner.abs_tol = cfg.abs_tol * 1e-2;
  // s = sigma / beta.
  auto g = [&](double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::exp(-sigma) * heat_smoothed_f_at_zero(m, sigma / beta, kappa, inner) / beta;
  };
  QuadratureResult q = integrate_half_line(g, cfg, 1.0);
  if (!q.converged) throw NumericalError("resolvent quadrature did not converge");
  return q.value;
}

double riesz_resolvent_closed_form(const CorrelationModel& m, double beta, double kappa) {
  if (m.kind() != ModelKind::Riesz) throw UnsupportedError("closed-form resolvent requires a Riesz model");
  require_finite_positive(beta, "resolvent rate beta");
  require_finite_positive(kappa, "viscosity kappa");
  const double a = m.alpha();
  if (!(a < 2.0)) throw DomainError("resolvent diverges: Dalang condition fails (alpha >= 2)");
  const int d = m.dimension();
  const double c2 = m.c0() * std::pow(2.0, -0.5 * a) * std::tgamma(0.5 * (d - a)) / std::tgamma(0.5 * d) *
                    std::tgamma(1.0 - 0.5 * a);
  return c2 * std::pow(beta, -(2.0 - a) / 2.0) * std::pow(kappa, -0.5 * a);
}

double cutoff_window(PointView x, double n) {
  double w = 1.0;
  for (double v : x) {
    double t = 1.0 - std::fabs(v) / n;
    if (t <= 0.0) return 0.0;
    w *= t;
  }
  return w;
}

double cutoff_kernel_hn(const CorrelationModel& m, const CutoffConfig& cfg, PointView x) {
  if (!(cfg.n >= 1.0)) throw DomainError("cutoff level n must be >= 1");
  double w = cutoff_window(x, cfg.n);
  if (w == 0.0) return 0.0;
  return h_real(m, x) * w;
}

std::vector<double> gridded_h(const CorrelationModel& m, const LatticeGrid& grid) {
  if (m.dimension() != grid.dimension()) throw DomainError("model and grid dimensions differ");
  std::vector<double> h(grid.sites());
  Point x(grid.dimension());
  switch (m.kind()) {
    case ModelKind::GaussianH:
      for (std::size_t s = 0; s < grid.sites(); ++s) {
        grid.site_coordinates(s, x);
        h[s] = h_real(m, x);
      }
      return h;
    case ModelKind::Riesz: {
      auto fft = fft_for(grid);
      SpectralArray spec = fft->make_spectral();
      const double xi_min = 2.0 * kPi / grid.period();
      for (std::size_t k = 0; k < spec.size(); ++k) {
        double r = std::sqrt(grid.mode_wavenumber_sq(k));
        spec[k] = h_hat_radial(m, r > 0.0 ? r : xi_min);
      }
      RealArray out = fft->make_real();
      SpectralArray scratch = fft->make_spectral();
      fft->inverse(spec, out, scratch);
      const double inv_cell = 1.0 / grid.cell_volume();
      for (std::size_t s = 0; s < grid.sites(); ++s) h[s] = out[s] * inv_cell;
      return h;
    }
    case ModelKind::Constant:
      throw UnsupportedError("constant covariance has no kernel h");
  }
  return h;
}

std::vector<double> gridded_hn(const CorrelationModel& m, const LatticeGrid& grid, const CutoffConfig& cfg) {
  if (!(cfg.n >= grid.spacing()))
    throw DomainError("cutoff level n is smaller than one grid cell");
  std::vector<double> h = gridded_h(m, grid);
  Point x(grid.dimension());
  for (std::size_t s = 0; s < grid.sites(); ++s) {
    grid.site_coordinates(s, x);
    h[s] *= cutoff_window(x, cfg.n);
  }
  return h;
}

double compute_a_t(const CorrelationModel& m, double t, double kappa) {
  require_finite_positive(t, "time t");
  require_finite_positive(kappa, "viscosity kappa");
  // Only the branch delta^2 <= 4 kappa t matters: beyond it the objective is
  // t * f(delta), nonincreasing for radially decreasing f.
  const double ball2 = 4.0 * kappa * t;
  switch (m.kind()) {
    case ModelKind::Constant:
      return t * m.level();
    case ModelKind::Riesz: {
      const double a = m.alpha();
      if (a > 2.0) return std::numeric_limits<double>::infinity();
      return m.c0() * t * std::pow(ball2, -0.5 * a);
    }
    case ModelKind::GaussianH: {
      const double w2 = m.width() * m.width();
      if (4.0 * w2 <= ball2) return w2 / kappa * gaussian_f0(m) * std::exp(-1.0);
      return t * f_radial(m, std::sqrt(ball2));
    }
  }
  return 0.0;
}

double regularize_f_at_zero(const CorrelationModel& m, double dx, const QuadratureConfig& cfg) {
  require_finite_positive(dx, "grid spacing dx");
  if (m.bounded()) return f_at_zero(m);
  const double a = m.alpha();
  const double base = m.c0() * std::pow(0.5 * dx, -a);
  switch (m.dimension()) {
    case 1:
      return base / (1.0 - a);
    case 2: {
      // Mean of |y|^-alpha over [0,1]^2 in polar form, two symmetric wedges.
      QuadratureResult q = integrate_finite(
          [&](double th) { return std::pow(std::cos(th), a - 2.0); }, 0.0, kPi / 4.0, cfg);
      return base * 2.0 / (2.0 - a) * q.value;
    }
    default: {
      // Six symmetric copies of the wedge x >= y >= z in [0,1]^3.
      // z = r cos(th), y = r sin(th) sin(phi), x = r sin(th) cos(phi); rays exit at x = 1.
      auto inner = [&](double phi) {
        auto over_theta = [&](double th) {
          double rmax = 1.0 / (std::sin(th) * std::cos(phi));
          return std::pow(rmax, 3.0 - a) / (3.0 - a) * std::sin(th);
        };
        if (phi <= 0.0) return 0.0;
        return integrate_finite(over_theta, std::atan2(1.0, std::sin(phi)), kPi / 2.0, cfg).value;
      };
      QuadratureResult q = integrate_finite(inner, 0.0, kPi / 4.0, cfg);
      return base * 6.0 * q.value;
    }
  }
}

}  // namespace she
