#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "she/analysis.hpp"
#include "she/solver.hpp"
#include "she/stats.hpp"

using namespace she;

namespace {

SolverConfig small_config(SigmaFunction sigma, CorrelationModel model = CorrelationModel::gaussian_h(1, 1.0)) {
  SolverConfig cfg;
  cfg.kappa = 1.0;
  cfg.dt = 1.0 / 64.0;
  cfg.grid = LatticeGrid(1, 64, 0.25);
  cfg.sigma = sigma;
  cfg.u0 = InitialCondition::constant(1.0);
  cfg.model = model;
  return cfg;
}

double sup_norm(const RealArray& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace

TEST_CASE("sigma functions") {
  CHECK(SigmaFunction::bounded_both()(0.0) == 1.0);
  for (double u = -20.0; u <= 20.0; u += 0.37) {
    double v = SigmaFunction::bounded_both()(u);
    CHECK(v >= 0.5);
    CHECK(v <= 1.5);
  }
  CHECK(SigmaFunction::lipschitz_zero(2.0)(0.0) == 0.0);
  CHECK(SigmaFunction::linear(0.5)(4.0) == 2.0);
  CHECK(SigmaFunction::constant(0.3)(-100.0) == 0.3);
  CHECK_THROWS_AS(SigmaFunction::constant(-1.0), DomainError);
  // Recorded Lipschitz constants bound the numerical difference quotients.
  for (auto s : {SigmaFunction::bounded_both(), SigmaFunction::bounded_below(), SigmaFunction::linear(1.5),
                 SigmaFunction::lipschitz_zero(1.2)}) {
    for (double u = -5.0; u < 5.0; u += 0.01) CHECK(std::fabs(s(u + 1e-3) - s(u)) / 1e-3 <= s.lipschitz() * (1 + 1e-6));
    CHECK(SigmaFunction::from_json(s.to_json()).name() == s.name());
  }
}

TEST_CASE("step_count contract") {
  CHECK(step_count(1.0, 1.0 / 16.0) == 16);
  CHECK(step_count(0.5, 1.0 / 256.0) == 128);
  CHECK(step_count(0.0, 0.01) == 0);
  CHECK_THROWS_AS(step_count(1.0, 0.1), DomainError);
  CHECK_THROWS_AS(step_count(1.0, 0.3), DomainError);
}

TEST_CASE("zero sigma is pure heat flow") {
  auto cfg = small_config(SigmaFunction::constant(0.0));
  auto field = solve(cfg, 0.5, WhiteNoiseSource(1, 0));
  for (double v : field.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-13));

  cfg.u0 = InitialCondition::bump(1.0, 1.0);
  field = solve(cfg, 0.5, WhiteNoiseSource(1, 0));
  RealArray expected = apply_propagator(cfg.u0.sample(cfg.grid), HeatPropagator(cfg.grid, cfg.kappa, 0.5));
  for (std::size_t s = 0; s < cfg.grid.sites(); ++s) CHECK(field.values[s] == doctest::Approx(expected[s]).epsilon(1e-12));
}

TEST_CASE("t_final = 0 returns the sampled initial condition") {
  auto cfg = small_config(SigmaFunction::bounded_both());
  cfg.u0 = InitialCondition::bump(2.0, 1.5);
  auto field = solve(cfg, 0.0, WhiteNoiseSource(3, 0));
  CHECK(field.values == cfg.u0.sample(cfg.grid));
  CHECK(field.t == 0.0);
}

TEST_CASE("single step: one-step function agrees with the solver class") {
  auto cfg = small_config(SigmaFunction::bounded_both());
  Solver solver(cfg);
  WhiteNoiseSource src(5, 2);
  NoiseSlice slice = correlate_slice(sample_white_slice(src, cfg.grid, cfg.dt), solver.noise(), cfg.dt);
  SolutionField a = solver.initial();
  solver.step(a, slice);
  SolutionField b = step(solver.initial(), slice, cfg);
  CHECK(a.values == b.values);
  CHECK(a.t == cfg.dt);

  NoiseSlice wrong = slice;
  wrong.dt = cfg.dt / 2;
  CHECK_THROWS_AS(solver.step(a, wrong), DomainError);
}

TEST_CASE("PAM one-step mean is one") {
  auto cfg = small_config(SigmaFunction::linear(1.0));
  cfg.grid = LatticeGrid(1, 16, 0.5);
  Solver solver(cfg);
  std::vector<double> u;
  const int N = 100000;
  u.reserve(N);
  for (int r = 0; r < N; ++r) {
    WhiteNoiseSource src(17, static_cast<std::uint64_t>(r));
    NoiseSlice slice = correlate_slice(sample_white_slice(src, cfg.grid, cfg.dt), solver.noise(), cfg.dt);
    SolutionField f = solver.initial();
    solver.step(f, slice);
    u.push_back(f.values[0]);
  }
  Estimate e = mean_with_stderr(u);
  CHECK(std::fabs(e.value - 1.0) < 4 * e.stderr_);
}

TEST_CASE("constant sigma variance matches the Gaussian quadrature") {
  const double eps0 = 0.7, t = 0.25;
  auto model = CorrelationModel::gaussian_h(1, 1.0);
  auto cfg = small_config(SigmaFunction::constant(eps0), model);
  cfg.grid = LatticeGrid(1, 128, 0.125);
  Solver solver(cfg);
  const int N = 4000;
  std::vector<double> u(N);
  for (int r = 0; r < N; ++r) u[r] = solver.solve(t, WhiteNoiseSource(23, r)).values[0];
  const double m = mean(u);
  std::vector<double> sq(N);
  for (int r = 0; r < N; ++r) sq[r] = (u[r] - m) * (u[r] - m);
  Estimate var = mean_with_stderr(sq);
  const double target = gaussian_variance_quadrature(model, cfg.kappa, t, eps0);
  CHECK(std::fabs(var.value - target) < 3 * var.stderr_ + 0.05 * target);
}

TEST_CASE("constant sigma gives a Gaussian field: skewness near zero") {
  auto cfg = small_config(SigmaFunction::constant(1.0));
  cfg.grid = LatticeGrid(1, 16, 0.5);
  Solver solver(cfg);
  const int N = 100000;
  std::vector<double> u(N);
  for (int r = 0; r < N; ++r) u[r] = solver.solve(0.25, WhiteNoiseSource(29, r)).values[0];
  const double m = mean(u), v = variance(u);
  std::vector<double> z3(N);
  for (int r = 0; r < N; ++r) z3[r] = std::pow((u[r] - m) / std::sqrt(v), 3);
  Estimate sk = mean_with_stderr(z3);
  CHECK(std::fabs(sk.value) < 4 * sk.stderr_);
}

TEST_CASE("determinism and stream bookkeeping") {
  auto cfg = small_config(SigmaFunction::bounded_both());
  auto a = solve(cfg, 0.5, WhiteNoiseSource(77, 4));
  auto b = solve(cfg, 0.5, WhiteNoiseSource(77, 4));
  auto c = solve(cfg, 0.5, WhiteNoiseSource(77, 5));
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  CHECK(a.seed == 77);
  CHECK(a.stream_id == 4);
  CHECK(a.steps == 32);
  CHECK(a.t == doctest::Approx(0.5));
}

TEST_CASE("dt-halving self-convergence for the bounded-sigma scenario") {
  auto cfg = small_config(SigmaFunction::bounded_both());
  cfg.dt = 1.0 / 64.0;
  const double t = 0.5;
  const auto& grid = cfg.grid;
  const std::uint64_t seed = 99;
  // Fine increments indexed by fine step; the coarse increment is the sum of a pair.
  auto fine_white = [&](std::size_t fine_step, RealArray& w) {
    WhiteNoiseSource src(seed, 0);
    src.seek(fine_step);
    sample_white_slice_into(src, grid, cfg.dt / 2, w);
  };
  SolverConfig fine = cfg;
  fine.dt = cfg.dt / 2;
  auto uf = Solver(fine).solve_white(t, fine_white);
  auto uc = Solver(cfg).solve_white(t, [&](std::size_t step, RealArray& w) {
    RealArray tmp(grid.sites());
    fine_white(2 * step, w);
    fine_white(2 * step + 1, tmp);
    for (std::size_t s = 0; s < w.size(); ++s) w[s] += tmp[s];
  });
  const double sf = sup_norm(uf.values), sc = sup_norm(uc.values);
  CHECK(std::fabs(sf - sc) < 0.05 * sf);
}

TEST_CASE("PAM positivity clamp") {
  auto cfg = small_config(SigmaFunction::linear(1.0), CorrelationModel::riesz(1, 0.5));
  Solver solver(cfg);
  CHECK(solver.clamps());
  for (int r = 0; r < 20; ++r) {
    auto f = solver.solve(1.0, WhiteNoiseSource(31, r));
    double mx = sup_norm(f.values);
    for (double v : f.values) CHECK(v >= -1e-12 * mx);
  }
  CHECK_FALSE(Solver(small_config(SigmaFunction::bounded_both())).clamps());
}

TEST_CASE("PAM mean conservation over replicas") {
  auto cfg = small_config(SigmaFunction::linear(1.0));
  cfg.grid = LatticeGrid(1, 32, 0.5);
  Solver solver(cfg);
  const int N = 4000;
  std::vector<double> half(N), full(N);
  for (int r = 0; r < N; ++r) {
    auto src = WhiteNoiseSource(37, r);
    full[r] = solver.solve(1.0, src).values[0];
    half[r] = solver.solve(0.5, src).values[0];
  }
  for (const auto& x : {half, full}) {
    Estimate e = mean_with_stderr(x);
    CHECK(std::fabs(e.value - 1.0) < 4 * e.stderr_);
  }
}

TEST_CASE("Picard iteration") {
  SUBCASE("one iterate with constant sigma equals the solver") {
    auto cfg = small_config(SigmaFunction::constant(0.8));
    auto p = picard_solve(cfg, 0.5, 1, WhiteNoiseSource(41, 0));
    auto s = solve(cfg, 0.5, WhiteNoiseSource(41, 0));
    double scale = sup_norm(s.values);
    for (std::size_t i = 0; i < s.values.size(); ++i) CHECK(std::fabs(p.field.values[i] - s.values[i]) <= 1e-12 * scale);
    CHECK(p.distances.size() == 1);
  }
  SUBCASE("PAM benchmark contraction: f(0) = 1, t = 1/4") {
    auto cfg = small_config(SigmaFunction::linear(1.0), CorrelationModel::gaussian_h(1, 1.0, std::pow(std::acos(-1.0), -0.25)));
    auto p = picard_solve(cfg, 0.25, 6, WhiteNoiseSource(43, 0));
    REQUIRE(p.distances.size() == 6);
    for (std::size_t l = 1; l < p.distances.size(); ++l) CHECK(p.distances[l] < p.distances[l - 1]);
    CHECK(p.distances.back() < 1e-3 * lattice_l2_norm(p.field.values, cfg.grid));
    CHECK(p.warnings.empty());
  }
  CHECK_THROWS_AS(picard_solve(small_config(SigmaFunction::linear(1.0)), 0.5, 0, WhiteNoiseSource(1, 0)), DomainError);
}

TEST_CASE("localized solve") {
  auto cfg = small_config(SigmaFunction::bounded_both(), CorrelationModel::riesz(1, 0.5));
  cfg.grid = LatticeGrid(1, 128, 0.25);
  const double t = 0.25;

  SUBCASE("default iteration count") {
    CHECK(LocalizationConfig{8.0, -1}.iterations() == 3);
    CHECK(LocalizationConfig{1.0, -1}.iterations() == 1);
    CHECK(LocalizationConfig{32.0, -1}.iterations() == 4);
  }
  SUBCASE("zero iterations is heat flow of u0") {
    cfg.u0 = InitialCondition::bump(1.0, 2.0);
    auto r = localized_solve(cfg, LocalizationConfig{4.0, 0}, t, WhiteNoiseSource(1, 0));
    RealArray expected = apply_propagator(cfg.u0.sample(cfg.grid), HeatPropagator(cfg.grid, cfg.kappa, t));
    for (std::size_t s = 0; s < cfg.grid.sites(); ++s) CHECK(r.field.values[s] == doctest::Approx(expected[s]).epsilon(1e-12));
  }
  SUBCASE("unbounded window agrees with the plain solver") {
    auto r = localized_solve(cfg, LocalizationConfig{LocalizationConfig::unbounded, 8}, t, WhiteNoiseSource(3, 1));
    auto s = solve(cfg, t, WhiteNoiseSource(3, 1));
    CHECK(lattice_l2_distance(r.field.values, s.values, cfg.grid) < 1e-6 * lattice_l2_norm(s.values, cfg.grid));
  }
  SUBCASE("wide finite window approaches the plain solver") {
    cfg.grid = LatticeGrid(1, 256, 0.25);
    auto s = solve(cfg, t, WhiteNoiseSource(5, 2));
    double prev = std::numeric_limits<double>::infinity();
    for (double beta : {2.0, 8.0, 32.0}) {
      auto r = localized_solve(cfg, LocalizationConfig{beta, 6}, t, WhiteNoiseSource(5, 2));
      double d = lattice_l2_distance(r.field.values, s.values, cfg.grid);
      CHECK(d < prev);
      prev = d;
    }
  }
  SUBCASE("window validation") {
    try {
      validate_localization(cfg, LocalizationConfig{32.0, -1}, 1.0);
      FAIL("expected a window violation");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("beta*sqrt(t) <= L/4") != std::string::npos);
    }
    CHECK_NOTHROW(validate_localization(cfg, LocalizationConfig{8.0, -1}, 1.0));
    CHECK_THROWS_AS(validate_localization(cfg, LocalizationConfig{-1.0, -1}, 1.0), DomainError);
  }
}

TEST_CASE("snapshot and config JSON") {
  auto cfg = small_config(SigmaFunction::bounded_both());
  auto j = solver_config_to_json(cfg);
  CHECK(j["kappa"] == 1.0);
  CHECK(j["sigma"]["kind"] == "bounded_both");
  CHECK(InitialCondition::from_json(InitialCondition::bump(2.0, 0.5).to_json()).width == 0.5);
  CHECK(InitialCondition::from_json(nlohmann::json(3.0)).level == 3.0);
}
