#include <benchmark/benchmark.h>

#include "she/analysis.hpp"
#include "she/fk_oracle.hpp"
#include "she/noise.hpp"

using namespace she;

namespace {

Scenario pam_scenario(Execution ex) {
  Scenario sc;
  sc.solver.model = CorrelationModel::gaussian_h(1, 1.0);
  sc.solver.grid = LatticeGrid(1, 256, 0.125);
  sc.solver.dt = 1.0 / 64.0;
  sc.solver.sigma = SigmaFunction::linear(1.0);
  sc.t_final = 0.5;
  sc.seed = 9;
  sc.farm.execution = ex;
  return sc;
}

Execution execution(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::Serial : Execution::OpenMP;
}

void BM_moments(benchmark::State& state) {
  const Scenario sc = pam_scenario(execution(state));
  for (auto _ : state) benchmark::DoNotOptimize(estimate_moments(sc, {2}, 64));
  state.SetItemsProcessed(state.iterations() * 64);
}

void BM_oracle(benchmark::State& state) {
  FkOracleConfig cfg;
  cfg.k = 3;
  cfg.walkers = 4000;
  cfg.inner_steps = 200;
  cfg.farm.execution = execution(state);
  const auto model = CorrelationModel::riesz(1, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(fk_moment_oracle(model, 1.0, 1.0, cfg));
  state.SetItemsProcessed(state.iterations() * cfg.walkers);
}

void BM_noise_selftest(benchmark::State& state) {
  const NoiseKernel kernel(CorrelationModel::gaussian_h(1, 1.0), LatticeGrid(1, 256, 0.125), NoiseLevel::full());
  FarmOptions opt;
  opt.execution = execution(state);
  for (auto _ : state) benchmark::DoNotOptimize(noise_selftest(kernel, 1.0 / 256.0, {0, 2, 5, 10}, 2000, 3, opt));
  state.SetItemsProcessed(state.iterations() * 2000);
}

void BM_localized_solve(benchmark::State& state) {
  SolverConfig cfg;
  cfg.model = CorrelationModel::riesz(1, 0.5);
  cfg.grid = LatticeGrid(1, 256, 0.5);
  cfg.dt = 1.0 / 32.0;
  cfg.sigma = SigmaFunction::bounded_both();
  LocalizationConfig loc;
  loc.beta = static_cast<double>(state.range(0));
  const WhiteNoiseSource src(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(localized_solve(cfg, loc, 1.0, src));
}

}  // namespace

// Argument 0 is the serial reference farm, 1 the OpenMP farm.
BENCHMARK(BM_moments)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_oracle)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_noise_selftest)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_localized_solve)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
