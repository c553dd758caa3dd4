#include "she/analysis.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

namespace she {

namespace {

nlohmann::json estimate_json(const Estimate& e) { return {{"value", e.value}, {"stderr", e.stderr_}, {"n", e.n}}; }

nlohmann::json failures_json(const std::vector<std::pair<std::size_t, std::string>>& f) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [s, msg] : f) j.push_back({{"stream", s}, {"error", msg}});
  return j;
}

}  // namespace

std::vector<std::size_t> Scenario::probe_sites() const {
  if (probes.empty()) return {0};
  std::vector<std::size_t> s;
  for (const auto& p : probes) s.push_back(solver.grid.nearest_site(p));
  return s;
}

FarmResult<std::vector<double>> sample_probe_values(const Scenario& sc, std::size_t n) {
  Solver solver(sc.solver);
  const auto sites = sc.probe_sites();
  auto task = [&](std::size_t r) {
    SolutionField f = solver.solve(sc.t_final, WhiteNoiseSource(sc.seed, r));
    std::vector<double> v;
    for (std::size_t s : sites) v.push_back(f.values[s]);
    return v;
  };
  return farm<std::vector<double>>(n, task, sc.farm);
}

MomentReport moments_from_samples(const std::vector<std::vector<double>>& values, const std::vector<int>& ks,
                                  bool average_probes) {
  if (values.size() < 2) throw DomainError("moment estimation needs at least two replicas");
  MomentReport rep;
  rep.replicas = values.size();
  const std::size_t np = values.front().size();
  for (int k : ks) {
    if (k < 1) throw DomainError("moment orders must be >= 1");
    MomentRow row;
    row.k = k;
    std::vector<double> pooled(values.size());
    for (std::size_t p = 0; p < np; ++p) {
      std::vector<double> x(values.size());
      for (std::size_t r = 0; r < values.size(); ++r) x[r] = std::pow(std::fabs(values[r][p]), k);
      row.per_probe.push_back(mean_with_stderr(x));
    }
    for (std::size_t r = 0; r < values.size(); ++r) {
      if (average_probes) {
        KahanSum s;
        for (std::size_t p = 0; p < np; ++p) s.add(std::pow(std::fabs(values[r][p]), k));
        pooled[r] = s.value() / static_cast<double>(np);
      } else {
        pooled[r] = std::pow(std::fabs(values[r][0]), k);
      }
    }
    row.estimate = mean_with_stderr(pooled);
    row.heavy_tail = heavy_tailed(pooled);
    row.unreliable = k > 8 || !(row.estimate.value > 0.0) || row.estimate.stderr_ > 0.5 * row.estimate.value;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

MomentReport estimate_moments(const Scenario& sc, const std::vector<int>& ks, std::size_t n) {
  auto res = sample_probe_values(sc, n);
  MomentReport rep = moments_from_samples(res.values, ks, sc.average_probes);
  rep.t = sc.t_final;
  rep.failures = res.failures;
  if (sc.probes.empty())
    rep.probes = {Point(sc.solver.grid.dimension(), 0.0)};
  else
    rep.probes = sc.probes;
  return rep;
}

nlohmann::json MomentReport::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json pp = nlohmann::json::array();
    for (const auto& e : r.per_probe) pp.push_back(estimate_json(e));
    rows_j.push_back({{"k", r.k},
                      {"estimate", r.estimate.value},
                      {"stderr", r.estimate.stderr_},
                      {"unreliable", r.unreliable},
                      {"heavy_tail", r.heavy_tail},
                      {"per_probe", pp}});
  }
  return {{"rows", rows_j}, {"replicas", replicas}, {"t", t}, {"probes", probes}, {"failures", failures_json(failures)}};
}

TailEstimate tail_from_samples(std::span<const double> values, double lambda, bool require_lambda_above_e) {
  if (require_lambda_above_e && !(lambda > std::numbers::e)) throw DomainError("tail threshold lambda must exceed e");
  TailEstimate t;
  t.lambda = lambda;
  t.trials = values.size();
  for (double v : values)
    if (std::fabs(v) > lambda) ++t.exceedances;
  t.probability = static_cast<double>(t.exceedances) / static_cast<double>(t.trials);
  t.interval = wilson_interval(t.exceedances, t.trials);
  t.upper_bound_only = t.exceedances == 0;
  return t;
}

TailEstimate tail_probability(const Scenario& sc, double lambda, std::size_t n) {
  if (!(lambda > std::numbers::e)) throw DomainError("tail threshold lambda must exceed e");
  auto res = sample_probe_values(sc, n);
  std::vector<double> v;
  for (const auto& r : res.values) v.push_back(r[0]);
  return tail_from_samples(v, lambda);
}

double spatial_sup(const SolutionField& field, double R, PointView center) {
  const LatticeGrid& g = field.grid;
  if (!(R >= 0.0) || R > g.period() / 2.0) throw DomainError("spatial_sup requires 0 <= R <= L/2");
  Point c(g.dimension(), 0.0);
  if (!center.empty()) {
    if (static_cast<int>(center.size()) != g.dimension()) throw DomainError("spatial_sup: center dimension mismatch");
    c.assign(center.begin(), center.end());
  }
  Point x(g.dimension());
  double best = 0.0;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    g.site_coordinates(s, x);
    if (torus_distance(x, c, g.period()) <= R) best = std::max(best, std::fabs(field.values[s]));
  }
  return best;
}

nlohmann::json ExponentFit::to_json() const {
  return {{"exponent", exponent}, {"stderr", stderr_}, {"intercept", intercept}, {"r_squared", r_squared},
          {"ci95", ci95}, {"excluded", excluded}, {"method", method}, {"abscissae", abscissae},
          {"ordinates", ordinates}};
}

ExponentFit fluctuation_exponent(const std::vector<std::pair<double, double>>& series) {
  ExponentFit fit;
  fit.method = "log y = log A + psi log log R";
  std::vector<double> x, y, radii;
  for (const auto& [R, v] : series) {
    if (!(R > 1.0)) throw DomainError("fluctuation fit requires radii R > 1");
    if (!(v > 0.0)) {
      ++fit.excluded;
      continue;
    }
    radii.push_back(R);
    x.push_back(std::log(std::log(R)));
    y.push_back(std::log(v));
  }
  if (x.size() < 4) throw DomainError("fluctuation fit needs at least 4 radii with positive values");
  const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
  if (*hi / *lo < 8.0 - 1e-12) throw DomainError("fluctuation fit radii must span a factor of at least 8");
  LinearFit lf = linear_regression(x, y);
  fit.abscissae = x;
  fit.ordinates = y;
  fit.exponent = lf.slope;
  fit.stderr_ = lf.slope_stderr;
  fit.intercept = lf.intercept;
  fit.r_squared = lf.r_squared;
  fit.ci95 = lf.slope_ci95;
  return fit;
}

namespace {

struct ProfileFit {
  double a, b, rss;
};

ProfileFit profile_at(const std::vector<double>& k, const std::vector<double>& y, double theta) {
  const std::size_t n = k.size();
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    A(i, 0) = k[i];
    A(i, 1) = std::pow(k[i], theta);
    b(i) = y[i];
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  return {c(0), c(1), (b - A * c).squaredNorm()};
}

}  // namespace

ExponentFit moment_growth_exponent(const std::vector<int>& ks, const std::vector<double>& log_moments,
                                   GrowthFitMethod method) {
  if (ks.size() != log_moments.size()) throw DomainError("moment growth fit: length mismatch");
  std::vector<double> k, y;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    bool ok = std::isfinite(log_moments[i]) && (method == GrowthFitMethod::Profile || log_moments[i] > 0.0);
    if (!ok) {
      ++excluded;
      continue;
    }
    k.push_back(ks[i]);
    y.push_back(log_moments[i]);
  }
  if (k.size() < 4) throw DomainError("moment growth fit needs at least 4 reliable moment orders");
  ExponentFit fit;
  fit.excluded = excluded;
  if (method == GrowthFitMethod::LogLog) {
    std::vector<double> lx(k.size()), ly(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) {
      lx[i] = std::log(k[i]);
      ly[i] = std::log(y[i]);
    }
    LinearFit lf = linear_regression(lx, ly);
    fit.method = "log log M(k) vs log k";
    fit.abscissae = lx;
    fit.ordinates = ly;
    fit.exponent = lf.slope;
    fit.stderr_ = lf.slope_stderr;
    fit.intercept = lf.intercept;
    fit.r_squared = lf.r_squared;
    fit.ci95 = lf.slope_ci95;
    return fit;
  }
  fit.method = "log M(k) = a k + b k^theta";
  fit.abscissae = k;
  fit.ordinates = y;
  // Coarse scan then Brent refinement of the profiled residual.
  const double lo = 1.05, hi = 6.0;
  double best_t = lo, best_rss = std::numeric_limits<double>::infinity();
  for (double th = lo; th <= hi + 1e-12; th += 0.01) {
    double r = profile_at(k, y, th).rss;
    if (r < best_rss) {
      best_rss = r;
      best_t = th;
    }
  }
  auto rss = [&](double th) { return profile_at(k, y, th).rss; };
  auto [theta, rmin] = boost::math::tools::brent_find_minima(rss, std::max(lo, best_t - 0.01),
                                                             std::min(hi, best_t + 0.01), 52);
  (void)rmin;
  ProfileFit pf = profile_at(k, y, theta);
  fit.exponent = theta;
  fit.intercept = pf.a;
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double tss = 0.0;
  for (double v : y) tss += (v - ybar) * (v - ybar);
  fit.r_squared = tss > 0.0 ? 1.0 - pf.rss / tss : 1.0;
  const std::size_t n = k.size();
  if (n > 3) {
    Eigen::MatrixXd J(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      double kt = std::pow(k[i], theta);
      J(i, 0) = k[i];
      J(i, 1) = kt;
      J(i, 2) = pf.b * kt * std::log(k[i]);
    }
    Eigen::Matrix3d JtJ = J.transpose() * J;
    const double s2 = pf.rss / static_cast<double>(n - 3);
    Eigen::FullPivLU<Eigen::Matrix3d> lu(JtJ);
    if (lu.isInvertible()) {
      Eigen::Matrix3d cov = s2 * lu.inverse();
      fit.stderr_ = std::sqrt(std::max(0.0, cov(2, 2)));
      fit.ci95 = student_t_quantile(0.95, static_cast<double>(n - 3)) * fit.stderr_;
    }
  }
  return fit;
}

ExponentFit moment_growth_exponent(const MomentReport& report, GrowthFitMethod method) {
  std::vector<int> ks;
  std::vector<double> lm;
  std::size_t unreliable = 0;
  for (const auto& r : report.rows) {
    if (r.unreliable) {
      ++unreliable;
      continue;
    }
    ks.push_back(r.k);
    lm.push_back(std::log(r.estimate.value));
  }
  ExponentFit fit = moment_growth_exponent(ks, lm, method);
  fit.excluded += unreliable;
  return fit;
}

nlohmann::json IndependenceResult::to_json() const {
  return {{"correlation", correlation},
          {"max_abs_offdiag", max_abs_offdiag},
          {"null_band", null_band},
          {"min_separation", min_separation},
          {"required_separation", required_separation},
          {"separated", separated},
          {"within_band", within_band},
          {"replicas", replicas},
          {"failures", failures_json(failures)}};
}

IndependenceResult independence_test(const std::vector<Point>& points, const Scenario& sc,
                                     const LocalizationConfig& loc, std::size_t n) {
  if (points.size() < 2) throw DomainError("independence test needs at least two points");
  validate_localization(sc.solver, loc, sc.t_final);
  const LatticeGrid& g = sc.solver.grid;
  std::vector<std::size_t> sites;
  for (const auto& p : points) sites.push_back(g.nearest_site(p));
  auto task = [&](std::size_t r) {
    PicardResult pr = localized_solve(sc.solver, loc, sc.t_final, WhiteNoiseSource(sc.seed, r));
    std::vector<double> v;
    for (std::size_t s : sites) v.push_back(pr.field.values[s]);
    return v;
  };
  auto res = farm<std::vector<double>>(n, task, sc.farm);
  IndependenceResult out;
  out.replicas = res.values.size();
  out.failures = res.failures;
  out.correlation = pearson_matrix(res.values);
  const std::size_t p = points.size();
  out.min_separation = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < p; ++a)
    for (std::size_t b = a + 1; b < p; ++b) {
      out.max_abs_offdiag = std::max(out.max_abs_offdiag, std::fabs(out.correlation[a][b]));
      out.min_separation =
          std::min(out.min_separation, d_separation(g.site_coordinates(sites[a]), g.site_coordinates(sites[b]), g.period()));
    }
  const int iters = loc.iterations();
  out.required_separation = 2.0 * iters * loc.beta * (1.0 + std::sqrt(sc.t_final));
  out.separated = out.min_separation >= out.required_separation;
  out.null_band = 4.0 / std::sqrt(static_cast<double>(out.replicas));
  out.within_band = out.max_abs_offdiag < out.null_band;
  return out;
}

nlohmann::json LocalizationCurve::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"beta", r.beta}, {"n_picard", r.n_picard}, {"k", r.k}, {"error", r.error.value},
                      {"stderr", r.error.stderr_}});
  nlohmann::json fits_j = nlohmann::json::array();
  for (const auto& [k, f] : fits)
    fits_j.push_back({{"k", k}, {"slope", f.slope}, {"slope_stderr", f.slope_stderr}, {"slope_ci95", f.slope_ci95},
                      {"negative_at_95", f.slope + f.slope_ci95 < 0.0}, {"r_squared", f.r_squared}});
  return {{"rows", rows_j}, {"fits", fits_j}, {"replicas", replicas}, {"failures", failures_json(failures)}};
}

LocalizationCurve localization_error_curve(const Scenario& sc, const std::vector<double>& betas,
                                           const std::vector<int>& ks, std::size_t n, int n_picard) {
  if (betas.empty()) throw DomainError("localization curve needs at least one beta");
  for (double b : betas) validate_localization(sc.solver, LocalizationConfig{b, n_picard}, sc.t_final);
  Solver solver(sc.solver);
  const std::size_t site = sc.probe_sites().front();
  auto task = [&](std::size_t r) {
    WhiteNoiseSource src(sc.seed, r);
    SolutionField u = solver.solve(sc.t_final, src);
    std::vector<double> diff;
    for (double b : betas) {
      PicardResult U = localized_solve(sc.solver, LocalizationConfig{b, n_picard}, sc.t_final, src);
      diff.push_back(u.values[site] - U.field.values[site]);
    }
    return diff;
  };
  auto res = farm<std::vector<double>>(n, task, sc.farm);
  if (res.values.size() < 2) throw NumericalError("localization curve: fewer than two successful replicas");
  LocalizationCurve curve;
  curve.replicas = res.values.size();
  curve.failures = res.failures;
  for (int k : ks) {
    if (k < 1) throw DomainError("moment orders must be >= 1");
    std::vector<double> lb, le;
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
      std::vector<double> x(res.values.size());
      for (std::size_t r = 0; r < x.size(); ++r) x[r] = std::pow(std::fabs(res.values[r][bi]), k);
      Estimate e = jackknife_of_mean(x, [k](double m) { return std::pow(std::max(m, 0.0), 1.0 / k); });
      curve.rows.push_back({betas[bi], LocalizationConfig{betas[bi], n_picard}.iterations(), k, e});
      if (e.value > 0.0) {
        lb.push_back(std::log(betas[bi]));
        le.push_back(std::log(e.value));
      }
    }
    if (lb.size() >= 2) curve.fits.emplace_back(k, linear_regression(lb, le));
  }
  return curve;
}

ExponentFit BoundednessResult::pooled_fit() const {
  std::vector<std::pair<double, double>> s;
  for (const auto& r : rows) s.emplace_back(r.R, r.sup.value);
  return fluctuation_exponent(s);
}

Estimate BoundednessResult::per_replica_fit() const {
  std::vector<double> ex;
  for (const auto& series : per_replica) {
    std::vector<std::pair<double, double>> s;
    for (std::size_t j = 0; j < rows.size(); ++j) s.emplace_back(rows[j].R, series[j]);
    try {
      ex.push_back(fluctuation_exponent(s).exponent);
    } catch (const DomainError&) {
    }
  }
  if (ex.size() < 2) return {};
  return mean_with_stderr(ex);
}

nlohmann::json BoundednessResult::to_json() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows)
    rows_j.push_back({{"R", r.R}, {"mean_sup", r.sup.value}, {"stderr", r.sup.stderr_},
                      {"mean_log_sup", r.log_sup.value}, {"log_stderr", r.log_sup.stderr_}});
  nlohmann::json inc = nlohmann::json::array();
  for (const auto& e : increments) inc.push_back(estimate_json(e));
  return {{"rows", rows_j}, {"increments", inc}, {"verdict", verdict}, {"replicas", replicas},
          {"failures", failures_json(failures)}};
}

BoundednessResult boundedness_probe(const Scenario& sc, const std::vector<double>& radii, std::size_t n) {
  if (radii.size() < 2) throw DomainError("insufficient ladder: boundedness probe needs at least two radii");
  for (std::size_t j = 1; j < radii.size(); ++j)
    if (!(radii[j] > radii[j - 1])) throw DomainError("boundedness ladder radii must be increasing");
  if (radii.back() > sc.solver.grid.period() / 2.0) throw DomainError("boundedness ladder exceeds L/2");
  Solver solver(sc.solver);
  auto task = [&](std::size_t r) {
    SolutionField f = solver.solve(sc.t_final, WhiteNoiseSource(sc.seed, r));
    std::vector<double> s;
    for (double R : radii) s.push_back(spatial_sup(f, R));
    return s;
  };
  auto res = farm<std::vector<double>>(n, task, sc.farm);
  if (res.values.size() < 2) throw NumericalError("boundedness probe: fewer than two successful replicas");
  BoundednessResult out;
  out.replicas = res.values.size();
  out.failures = res.failures;
  out.per_replica = res.values;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    std::vector<double> x, lx;
    for (const auto& s : res.values) {
      x.push_back(s[j]);
      if (s[j] > 0.0) lx.push_back(std::log(s[j]));
    }
    BoundednessRow row{radii[j], mean_with_stderr(x), {}};
    if (lx.size() >= 2) row.log_sup = mean_with_stderr(lx);
    out.rows.push_back(row);
    if (j > 0) {
      std::vector<double> d;
      for (const auto& s : res.values) d.push_back(s[j] - s[j - 1]);
      out.increments.push_back(mean_with_stderr(d));
    }
  }
  bool saturating = true;
  const std::size_t first = out.increments.size() >= 2 ? out.increments.size() - 2 : 0;
  for (std::size_t j = first; j < out.increments.size(); ++j)
    if (std::fabs(out.increments[j].value) > 2.0 * out.increments[j].stderr_) saturating = false;
  out.verdict = saturating ? "saturating" : "growing";
  return out;
}

double gaussian_variance_quadrature(const CorrelationModel& model, double kappa, double t, double eps0,
                                    const QuadratureConfig& cfg) {
  if (!(t >= 0.0) || !(kappa > 0.0)) throw DomainError("variance quadrature requires t >= 0 and kappa > 0");
  if (t == 0.0) return 0.0;
  const int d = model.dimension();
  const double pref = eps0 * eps0 * sphere_area(d) * std::pow(2.0 * std::numbers::pi, -d);
  auto g = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double x = kappa * t * r * r;
    return pref * spectral_radial(model, r) * (-std::expm1(-x)) / (kappa * r * r) * std::pow(r, d - 1);
  };
  QuadratureResult q = integrate_half_line(g, cfg, 1.0 / std::sqrt(kappa * t));
  if (!q.converged) throw NumericalError("variance quadrature did not converge");
  return q.value;
}

}  // namespace she
