#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "she/analysis.hpp"
#include "she/correlation.hpp"
#include "she/fk_oracle.hpp"
#include "she/grid.hpp"
#include "she/sigma.hpp"
#include "she/solver.hpp"

namespace she {

inline constexpr int kManifestVersion = 1;

/// The analysis verbs a manifest can request.
inline const std::vector<std::string>& analysis_names() {
  static const std::vector<std::string> names{"dalang",   "noise-selftest", "simulate",     "moments",    "oracle",
                                              "extremes", "localize",       "independence", "boundedness"};
  return names;
}

struct OracleSpec {
  std::size_t walkers = 20000;
  std::size_t inner_steps = 400;
  PairSum pair_sum = PairSum::Ordered;
  std::optional<double> r_reg;
};

struct AnalysisSpec {
  std::vector<std::string> run;
  std::size_t replicas = 10;
  std::vector<int> ks{2};
  std::vector<Point> probes;
  bool average_probes = false;
  std::vector<double> record_times;  ///< simulate; empty means {t_final}
  bool snapshot = false;
  std::vector<std::size_t> lags{0, 2, 5, 10};
  std::vector<double> lambdas;
  std::vector<double> radii;
  std::vector<double> betas{8.0, 16.0, 32.0};
  int n_picard = -1;
  double beta = 2.0;  ///< independence
  std::vector<Point> points;
  OracleSpec oracle;
};

struct ExperimentManifest {
  int version = kManifestVersion;
  std::string scenario = "unnamed";
  CorrelationModel model = CorrelationModel::gaussian_h(1, 1.0);
  LatticeGrid grid{1, 256, 0.125};
  double kappa = 1.0;
  double dt = 1.0 / 256.0;
  double t_final = 0.5;
  SigmaFunction sigma = SigmaFunction::constant(1.0);
  InitialCondition u0 = InitialCondition::constant(1.0);
  AnalysisSpec analysis;
  std::uint64_t seed = 0;
  std::string output;
  int threads = 0;

  nlohmann::json to_json() const;
  /// FNV-1a 64 of the canonical (key-sorted, compact) JSON dump.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  SolverConfig solver_config() const;
  Scenario scenario_config() const;
  FarmOptions farm_options() const;
};

/// Every problem found while reading or validating a manifest.
class ManifestError : public DomainError {
 public:
  explicit ManifestError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses and validates; throws ManifestError listing all problems at once.
ExperimentManifest parse_manifest(const nlohmann::json& j);
ExperimentManifest load_manifest(const std::string& path);
/// Semantic checks (windows, radii, time grid, model support) on a parsed manifest.
std::vector<std::string> validate_manifest(const ExperimentManifest& m);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Reads a model from a path to a JSON file or from inline JSON text.
CorrelationModel read_model_argument(const std::string& arg);

}  // namespace she
