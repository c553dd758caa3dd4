#include "she/fk_oracle.hpp"

#include <algorithm>
#include <cmath>

#include "she/noise.hpp"
#include "she/stats.hpp"

namespace she {

nlohmann::json FkOracleResult::to_json() const {
  return {{"k", k},
          {"t", t},
          {"estimate", estimate},
          {"stderr", stderr_},
          {"log_estimate", log_estimate},
          {"log_stderr", log_stderr},
          {"heavy_tail", heavy_tail},
          {"top_share", top_share},
          {"walkers", walkers},
          {"r_reg", r_reg}};
}

FkOracleResult fk_moment_oracle(const CorrelationModel& model, double kappa, double t, const FkOracleConfig& cfg,
                                double u0_level) {
  if (cfg.k < 2) throw DomainError("Feynman-Kac oracle requires k >= 2");
  if (cfg.walkers < 2) throw DomainError("Feynman-Kac oracle requires at least two walkers");
  if (cfg.inner_steps < 1) throw DomainError("Feynman-Kac oracle requires inner_steps >= 1");
  if (!(t > 0.0) || !(kappa > 0.0)) throw DomainError("Feynman-Kac oracle requires t > 0 and kappa > 0");
  if (model.kind() == ModelKind::Riesz && !(model.alpha() < 2.0))
    throw DomainError("Feynman-Kac oracle requires alpha < 2 for Riesz correlations");

  const int k = cfg.k;
  const int d = model.dimension();
  const std::size_t n = cfg.inner_steps;
  const double dt = t / static_cast<double>(n);
  const double r_reg = cfg.r_reg.value_or(std::sqrt(kappa * dt));
  const double sk = std::sqrt(kappa);
  const double pair_weight = cfg.pair_sum == PairSum::Ordered ? 2.0 : 1.0;

  auto walker = [&](std::size_t w) {
    WhiteNoiseSource src(cfg.seed, w);
    std::vector<double> inc(static_cast<std::size_t>(k) * d * n);
    src.fill(inc, std::sqrt(dt));
    std::vector<double> pos(static_cast<std::size_t>(k) * d, 0.0);
    auto pair_sum = [&]() {
      KahanSum s;
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
          double r2 = 0.0;
          for (int a = 0; a < d; ++a) {
            double z = pos[i * d + a] - pos[j * d + a];
            r2 += z * z;
          }
          s.add(f_radial(model, std::max(sk * std::sqrt(r2), r_reg)));
        }
      return s.value();
    };
    KahanSum integral;
    integral.add(0.5 * pair_sum());
    for (std::size_t s = 1; s <= n; ++s) {
      const double* step = inc.data() + (s - 1) * k * d;
      for (int c = 0; c < k * d; ++c) pos[c] += step[c];
      integral.add((s == n ? 0.5 : 1.0) * pair_sum());
    }
    return pair_weight * dt * integral.value();
  };

  FarmResult<double> logs = farm<double>(cfg.walkers, walker, cfg.farm);
  if (logs.partial()) throw NumericalError("Feynman-Kac walker failed: " + logs.failures.front().second);

  Estimate lme = log_mean_exp(logs.values);
  FkOracleResult res;
  res.k = k;
  res.t = t;
  res.walkers = cfg.walkers;
  res.r_reg = r_reg;
  res.log_estimate = static_cast<double>(k) * std::log(std::fabs(u0_level)) + lme.value;
  res.log_stderr = lme.stderr_;
  res.estimate = std::pow(u0_level, k) * std::exp(lme.value);
  res.stderr_ = std::fabs(res.estimate) * lme.stderr_;
  const double mx = *std::max_element(logs.values.begin(), logs.values.end());
  std::vector<double> w(logs.values.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logs.values[i] - mx);
  res.top_share = top_share(w);
  res.heavy_tail = res.top_share > 0.5;
  return res;
}

}  // namespace she
