#pragma once

#include <cstdint>
#include <optional>

#include "json.hpp"
#include "she/correlation.hpp"
#include "she/parallel.hpp"

namespace she {

/// Which pairs enter the exponent of the moment functional.
///  Ordered:   sum over i != j (each unordered pair counted twice).
///  Unordered: sum over i < j, the exact k-th moment of PAM with sigma(u) = u.
enum class PairSum { Ordered, Unordered };

struct FkOracleConfig {
  std::size_t walkers = 20000;
  std::size_t inner_steps = 400;
  int k = 2;
  /// Defaults to sqrt(kappa * dt_inner).
  std::optional<double> r_reg;
  PairSum pair_sum = PairSum::Ordered;
  std::uint64_t seed = 0;
  FarmOptions farm;
};

struct FkOracleResult {
  int k = 0;
  double t = 0.0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double log_estimate = 0.0;
  double log_stderr = 0.0;
  bool heavy_tail = false;
  double top_share = 0.0;
  std::size_t walkers = 0;
  double r_reg = 0.0;

  nlohmann::json to_json() const;
};

/// Monte Carlo of u0^k E exp(sum_pairs int_0^t f(sqrt(kappa)(b_i - b_j)) dr)
/// over k independent standard Brownian motions, trapezoid rule in time.
FkOracleResult fk_moment_oracle(const CorrelationModel& model, double kappa, double t, const FkOracleConfig& cfg,
                                double u0_level = 1.0);

}  // namespace she
