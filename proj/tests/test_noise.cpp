#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "she/noise.hpp"
#include "she/stats.hpp"

using namespace she;

namespace {

// Empirical covariance E[F(0) F(lag)] per unit time, pooled over sites and slices.
double empirical_lag_cov(const NoiseKernel& k, double dt, std::size_t lag, int slices, std::uint64_t seed) {
  const auto& g = k.grid();
  WhiteNoiseSource src(seed, 0);
  KahanSum acc;
  std::size_t n = 0;
  for (int i = 0; i < slices; ++i) {
    NoiseSlice sl = correlate_slice(sample_white_slice(src, g, dt), k, dt);
    for (std::size_t s = 0; s < g.sites(); ++s) {
      acc.add(sl.values[s] * sl.values[(s + lag) % g.sites()]);
      ++n;
    }
  }
  return acc.value() / static_cast<double>(n) / dt;
}

}  // namespace

TEST_CASE("white noise is deterministic and stream separated") {
  LatticeGrid g(1, 64, 0.5);
  WhiteNoiseSource a(42, 3), b(42, 3), c(42, 4), d(43, 3);
  RealArray xa = sample_white_slice(a, g, 0.1), xb = sample_white_slice(b, g, 0.1);
  RealArray xc = sample_white_slice(c, g, 0.1), xd = sample_white_slice(d, g, 0.1);
  CHECK(xa == xb);
  CHECK(xa != xc);
  CHECK(xa != xd);
  CHECK(a.step_counter() == 1);

  // Seeking regenerates any step.
  RealArray later = sample_white_slice(a, g, 0.1);
  WhiteNoiseSource e(42, 3);
  e.seek(1);
  CHECK(sample_white_slice(e, g, 0.1) == later);
}

TEST_CASE("white slice variance is dt / dx^d") {
  LatticeGrid g(2, 64, 0.25);
  const double dt = 0.01;
  WhiteNoiseSource src(1, 0);
  std::vector<double> sq;
  for (int i = 0; i < 20; ++i) {
    RealArray w = sample_white_slice(src, g, dt);
    for (double v : w) sq.push_back(v * v);
  }
  Estimate e = mean_with_stderr(sq);
  CHECK(std::fabs(e.value - dt / g.cell_volume()) < 4 * e.stderr_);
}

TEST_CASE("noise kernel multipliers") {
  LatticeGrid g(1, 256, 0.25);
  auto r = CorrelationModel::riesz(1, 0.5);
  NoiseKernel full(r, g, NoiseLevel::full());
  const auto& m = full.multipliers();
  CHECK(m.size() == g.spectral_size());
  const double xi1 = 2 * std::acos(-1.0) / g.period();
  CHECK(m[0] == doctest::Approx(h_hat_radial(r, xi1)).epsilon(1e-14));
  CHECK(m[1] == doctest::Approx(h_hat_radial(r, xi1)).epsilon(1e-14));
  CHECK(m[5] == doctest::Approx(h_hat_radial(r, 5 * xi1)).epsilon(1e-14));
  CHECK_THROWS_AS(NoiseKernel(CorrelationModel::constant(1, 1.0), g, NoiseLevel::full()), UnsupportedError);
  CHECK_THROWS_AS(NoiseKernel(r, g, NoiseLevel::cutoff(0.1)), DomainError);
}

TEST_CASE("correlated noise covariance matches the effective lattice covariance") {
  LatticeGrid g(1, 256, 0.25);
  const double dt = 0.05;
  for (const auto& model : {CorrelationModel::gaussian_h(1, 0.75), CorrelationModel::riesz(1, 0.5)}) {
    NoiseKernel k(model, g, NoiseLevel::full());
    auto target = k.effective_covariance();
    for (std::size_t lag : {0, 2, 4, 8}) {
      double emp = empirical_lag_cov(k, dt, lag, 400, 7 + lag);
      CHECK(std::fabs(emp - target[lag]) < 0.05 * target[0]);
    }
  }
}

TEST_CASE("effective covariance approximates f away from the origin") {
  LatticeGrid g(1, 1024, 0.125);
  auto gm = CorrelationModel::gaussian_h(1, 1.0);
  NoiseKernel k(gm, g, NoiseLevel::full());
  auto fe = k.effective_covariance();
  for (std::size_t j : {0, 4, 8, 16}) {
    double x = g.axis_coordinate(j);
    CHECK(fe[j] == doctest::Approx(evaluate_f(gm, Point{x}).value).epsilon(1e-8));
  }
}

TEST_CASE("cutoff and difference telescope to the full noise") {
  LatticeGrid g(2, 64, 0.25);
  auto r = CorrelationModel::riesz(2, 1.0);
  NoiseKernel full(r, g, NoiseLevel::full()), cut(r, g, NoiseLevel::cutoff(2.0)), diff(r, g, NoiseLevel::difference(2.0));
  WhiteNoiseSource src(9, 1);
  RealArray w = sample_white_slice(src, g, 0.01);
  auto a = correlate_slice(w, full, 0.01), b = correlate_slice(w, cut, 0.01), c = correlate_slice(w, diff, 0.01);
  double scale = 0.0;
  for (double v : a.values) scale = std::max(scale, std::fabs(v));
  for (std::size_t s = 0; s < g.sites(); ++s) CHECK(std::fabs(a.values[s] - b.values[s] - c.values[s]) < 1e-12 * scale);
}

TEST_CASE("cutoff noise is spatially independent beyond twice the window") {
  LatticeGrid g(1, 256, 0.25);
  auto r = CorrelationModel::riesz(1, 0.5);
  NoiseKernel cut(r, g, NoiseLevel::cutoff(2.0));
  auto fe = cut.effective_covariance();
  double f0 = fe[0];
  for (std::size_t j = 0; j < g.sites(); ++j) {
    double x = std::fabs(g.axis_coordinate(j));
    if (x >= 4.0) CHECK(std::fabs(fe[j]) < 1e-12 * f0);
  }
  CHECK(fe[4] > 0.0);
}

TEST_CASE("difference noise variance decreases with the cutoff level") {
  LatticeGrid g(1, 1024, 0.25);
  auto gm = CorrelationModel::gaussian_h(1, 1.5);
  double prev = std::numeric_limits<double>::infinity();
  for (double n : {1.0, 2.0, 4.0, 8.0, 16.0}) {
    double v = NoiseKernel(gm, g, NoiseLevel::difference(n)).effective_covariance()[0];
    CHECK(v < prev);
    CHECK(v >= 0.0);
    prev = v;
  }
  // Inside the window h - h_n = h |x| / n, so the residual variance is f(0) w^2 / (2 n^2).
  CHECK(prev == doctest::Approx(f_at_zero(gm) * 1.5 * 1.5 / (2.0 * 16.0 * 16.0)).epsilon(0.01));
}
