#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "she/correlation.hpp"
#include "she/lattice.hpp"
#include "she/noise.hpp"
#include "she/sigma.hpp"

namespace she {

/// u0 is either a constant level or the bump amplitude * exp(-|x|^2 / width^2).
struct InitialCondition {
  enum class Kind { Constant, Bump } kind = Kind::Constant;
  double level = 1.0;
  double width = 1.0;

  static InitialCondition constant(double c) { return {Kind::Constant, c, 1.0}; }
  static InitialCondition bump(double amplitude = 1.0, double width = 1.0) {
    return {Kind::Bump, amplitude, width};
  }

  double operator()(PointView x) const;
  double sup() const { return std::fabs(level); }
  double inf() const { return kind == Kind::Constant ? level : 0.0; }
  RealArray sample(const LatticeGrid& grid) const;

  nlohmann::json to_json() const;
  static InitialCondition from_json(const nlohmann::json& j);
};

struct SolverConfig {
  double kappa = 1.0;
  double dt = 1.0 / 256.0;
  LatticeGrid grid{1, 256, 0.125};
  SigmaFunction sigma = SigmaFunction::constant(1.0);
  InitialCondition u0 = InitialCondition::constant(1.0);
  CorrelationModel model = CorrelationModel::gaussian_h(1, 1.0);
};

/// Record of the positivity clamp applied to PAM trajectories.
struct ClampLog {
  std::size_t clamped_sites = 0;
  double min_before_clamp = 0.0;
  void merge(const ClampLog& o);
};

struct SolutionField {
  LatticeGrid grid{1, 8, 1.0};
  double t = 0.0;
  RealArray values;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t first_step = 0;
  std::size_t steps = 0;
  ClampLog clamp;
};

/// Number of steps for t_final; throws unless t_final = k dt with dt <= t_final/16.
std::size_t step_count(double t_final, double dt);

/// Provides the white slice for a given step index.
using WhiteProvider = std::function<void(std::size_t step, RealArray& white)>;

/// Mild-form exponential-Euler solver:  u_{n+1} = P_dt [u_n + sigma(u_n) dF_n].
class Solver {
 public:
  explicit Solver(const SolverConfig& cfg, NoiseLevel level = NoiseLevel::full());

  const SolverConfig& config() const { return cfg_; }
  const HeatPropagator& propagator() const { return prop_; }
  const NoiseKernel& noise() const { return *noise_; }

  SolutionField initial() const;

  /// One step with a precomputed noise slice.
  void step(SolutionField& field, const NoiseSlice& slice) const;

  SolutionField solve(double t_final, WhiteNoiseSource src) const;
  SolutionField solve_white(double t_final, const WhiteProvider& white) const;

  bool clamps() const { return cfg_.sigma.kind == SigmaKind::Linear; }

 private:
  void advance(RealArray& u, const RealArray& dF, double t, ClampLog& log, SpectralWorkspace& ws) const;

  SolverConfig cfg_;
  HeatPropagator prop_;
  std::shared_ptr<const NoiseKernel> noise_;
};

SolutionField step(const SolutionField& field, const NoiseSlice& slice, const SolverConfig& cfg);
SolutionField solve(const SolverConfig& cfg, double t_final, const WhiteNoiseSource& src);

struct PicardResult {
  SolutionField field;
  /// distances[l] = || U^(l+1)_t - U^(l)_t ||_2 on the lattice.
  std::vector<double> distances;
  std::vector<std::string> warnings;
};

/// Fixed-point iteration of the mild map with frozen noise; iterate 0 is u0.
PicardResult picard_solve(const SolverConfig& cfg, double t_final, int iterations, const WhiteNoiseSource& src);

struct LocalizationConfig {
  double beta = 8.0;
  /// Negative selects the default floor(log beta) + 1.
  int n_picard = -1;

  static constexpr double unbounded = std::numeric_limits<double>::infinity();
  int iterations() const;
};

/// Validates the localization window beta sqrt(t) <= L/4 and the cutoff level.
void validate_localization(const SolverConfig& cfg, const LocalizationConfig& loc, double t_final);

/// Localized Picard iterate U^(beta, n): noise from the cutoff kernel h_beta
/// and every stochastic convolution restricted to |y - x|_inf <= beta sqrt(t).
PicardResult localized_solve(const SolverConfig& cfg, const LocalizationConfig& loc, double t_final,
                             const WhiteNoiseSource& src);

/// Discrete L^2 norm sqrt(dx^d sum |a - b|^2).
double lattice_l2_distance(const RealArray& a, const RealArray& b, const LatticeGrid& grid);
double lattice_l2_norm(const RealArray& a, const LatticeGrid& grid);

nlohmann::json solver_config_to_json(const SolverConfig& cfg);

/// Snapshot writer: flat little-endian float64 array plus JSON header.
void write_snapshot(const SolutionField& field, const SolverConfig& cfg, const std::string& path_stem);

}  // namespace she
