#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "she/fk_oracle.hpp"
#include "she/parallel.hpp"
#include "she/solver.hpp"
#include "she/stats.hpp"

namespace she {

/// A solvable experiment: solver configuration, horizon, seed and probes.
struct Scenario {
  SolverConfig solver;
  double t_final = 1.0;
  std::uint64_t seed = 0;
  std::vector<Point> probes;  ///< empty means the origin
  bool average_probes = false;
  FarmOptions farm;

  std::vector<std::size_t> probe_sites() const;
};

/// Values at the probe sites for replicas 0..n-1, in stream-id order.
FarmResult<std::vector<double>> sample_probe_values(const Scenario& sc, std::size_t n);

struct MomentRow {
  int k = 0;
  Estimate estimate;
  bool unreliable = false;
  bool heavy_tail = false;
  std::vector<Estimate> per_probe;
};

struct MomentReport {
  std::vector<MomentRow> rows;
  std::size_t replicas = 0;
  double t = 0.0;
  std::vector<Point> probes;
  std::vector<std::pair<std::size_t, std::string>> failures;

  nlohmann::json to_json() const;
};

MomentReport estimate_moments(const Scenario& sc, const std::vector<int>& ks, std::size_t n);
/// Moment statistics from already sampled probe values.
MomentReport moments_from_samples(const std::vector<std::vector<double>>& values, const std::vector<int>& ks,
                                  bool average_probes);

struct TailEstimate {
  double lambda = 0.0;
  double probability = 0.0;
  Interval interval;
  std::size_t exceedances = 0;
  std::size_t trials = 0;
  /// True when no replica exceeded lambda; only `interval.upper` is meaningful.
  bool upper_bound_only = false;
};

TailEstimate tail_probability(const Scenario& sc, double lambda, std::size_t n);
TailEstimate tail_from_samples(std::span<const double> values, double lambda, bool require_lambda_above_e = true);

/// max |u| over sites within Euclidean torus distance R of `center`.
double spatial_sup(const SolutionField& field, double R, PointView center = {});

struct ExponentFit {
  std::vector<double> abscissae;
  std::vector<double> ordinates;
  double exponent = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double ci95 = 0.0;
  std::size_t excluded = 0;
  std::string method;

  nlohmann::json to_json() const;
};

/// Fits log y = log A + psi log log R on (R_j, y_j); y is mean log u* for
/// PAM-type tails or mean u* for bounded sigma. Nonpositive y are excluded.
ExponentFit fluctuation_exponent(const std::vector<std::pair<double, double>>& series);

enum class GrowthFitMethod {
  /// log M(k) = a k + b k^theta, theta profiled; exact for c k(k-1) and c k^2.
  Profile,
  /// Slope of log log M(k) against log k.
  LogLog
};

ExponentFit moment_growth_exponent(const std::vector<int>& ks, const std::vector<double>& log_moments,
                                   GrowthFitMethod method = GrowthFitMethod::Profile);
/// Uses the reliable rows of the report only.
ExponentFit moment_growth_exponent(const MomentReport& report, GrowthFitMethod method = GrowthFitMethod::Profile);

struct IndependenceResult {
  std::vector<std::vector<double>> correlation;
  double max_abs_offdiag = 0.0;
  double null_band = 0.0;
  double min_separation = 0.0;
  double required_separation = 0.0;
  bool separated = false;
  bool within_band = false;
  std::size_t replicas = 0;
  std::vector<std::pair<std::size_t, std::string>> failures;

  nlohmann::json to_json() const;
};

/// Pearson correlations of U^(beta, n)_t at the points over n replicas.
IndependenceResult independence_test(const std::vector<Point>& points, const Scenario& sc,
                                     const LocalizationConfig& loc, std::size_t n);

struct LocalizationRow {
  double beta = 0.0;
  int n_picard = 0;
  int k = 0;
  Estimate error;
};

struct LocalizationCurve {
  std::vector<LocalizationRow> rows;
  /// log error vs log beta, per k.
  std::vector<std::pair<int, LinearFit>> fits;
  std::size_t replicas = 0;
  std::vector<std::pair<std::size_t, std::string>> failures;

  nlohmann::json to_json() const;
};

/// ( E |u_t(x) - U^(beta,n)_t(x)|^k )^{1/k} per beta from coupled runs.
LocalizationCurve localization_error_curve(const Scenario& sc, const std::vector<double>& betas,
                                           const std::vector<int>& ks, std::size_t n, int n_picard = -1);

struct BoundednessRow {
  double R = 0.0;
  Estimate sup;
  Estimate log_sup;
};

struct BoundednessResult {
  std::vector<BoundednessRow> rows;
  std::vector<Estimate> increments;
  std::string verdict;
  /// Per-replica u*(R) series in stream-id order.
  std::vector<std::vector<double>> per_replica;
  std::size_t replicas = 0;
  std::vector<std::pair<std::size_t, std::string>> failures;

  ExponentFit pooled_fit() const;
  /// Mean and stderr of per-replica fitted exponents.
  Estimate per_replica_fit() const;
  nlohmann::json to_json() const;
};

/// Mean u*(R) per ladder radius; "saturating" when each of the last two
/// increments is within 2 stderr of zero, otherwise "growing".
BoundednessResult boundedness_probe(const Scenario& sc, const std::vector<double>& radii, std::size_t n);

/// eps0^2 (2 pi)^-d int f^(xi) (1 - e^{-kappa t |xi|^2}) / (kappa |xi|^2) dxi:
/// variance of the linear (constant sigma) solution.
double gaussian_variance_quadrature(const CorrelationModel& model, double kappa, double t, double eps0 = 1.0,
                                    const QuadratureConfig& cfg = {});

}  // namespace she
