#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "she/correlation.hpp"
#include "she/fft.hpp"

using namespace she;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson rule; the integrands used here are smooth and decay fast.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

double rel(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

}  // namespace

TEST_CASE("evaluate_f closed forms") {
  auto r = CorrelationModel::riesz(2, 1.0, 1.0);
  Point x{3.0, 4.0};
  CHECK(evaluate_f(r, x).value == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_FALSE(evaluate_f(r, x).singular);

  auto c = CorrelationModel::constant(3, 2.5);
  CHECK(evaluate_f(c, Point{1.0, -7.0, 0.3}).value == 2.5);
  CHECK(evaluate_f(c, Point{0.0, 0.0, 0.0}).value == 2.5);

  Point zero{0.0, 0.0};
  CHECK(evaluate_f(r, zero).singular);
}

TEST_CASE("Gaussian kernel: f(0) equals the integral of h squared") {
  for (int d : {1, 2, 3}) {
    const double w = 0.7, a = 1.3;
    auto g = CorrelationModel::gaussian_h(d, w, a);
    // int h^2 over R^d factorises into d one-dimensional integrals.
    double one_d = simpson([&](double s) { return std::exp(-s * s / (w * w)); }, -20 * w, 20 * w);
    double expected = a * a * std::pow(one_d, d);
    CHECK(rel(evaluate_f(g, Point(d, 0.0)).value, expected) < 1e-10);
  }
}

TEST_CASE("Gaussian kernel: f is the self-convolution of h") {
  const double w = 0.8, a = 1.1;
  auto g = CorrelationModel::gaussian_h(1, w, a);
  for (double x : {0.3, 1.0, 2.5}) {
    double conv = simpson(
        [&](double y) { return h_real(g, Point{y}) * h_real(g, Point{y - x}); }, -20 * w, 20 * w);
    CHECK(rel(evaluate_f(g, Point{x}).value, conv) < 1e-10);
  }
}

TEST_CASE("spectral_density values and homogeneity") {
  auto r = CorrelationModel::riesz(1, 0.5, 1.0);
  // sqrt(2 pi) = 2.5066282746310002
  CHECK(spectral_density(r, Point{1.0}).value == doctest::Approx(2.5066282746310002).epsilon(1e-12));

  auto r2 = CorrelationModel::riesz(2, 1.0, 1.0);
  Point xi{0.3, -1.2}, xi2{0.6, -2.4};
  CHECK(spectral_density(r2, xi).value / spectral_density(r2, xi2).value == doctest::Approx(2.0).epsilon(1e-12));

  auto g = CorrelationModel::gaussian_h(2, 0.9, 1.4);
  std::mt19937_64 eng(7);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int i = 0; i < 100; ++i) CHECK(spectral_density(g, Point{n(eng), n(eng)}).value >= 0.0);

  CHECK_THROWS_AS(spectral_density(CorrelationModel::constant(1, 1.0), Point{1.0}), UnsupportedError);
  CHECK(spectral_density(r, Point{0.0}).singular);
}

TEST_CASE("Riesz transform constant matches the Fourier transform of f in d = 3") {
  // FT of |x|^-1 in three dimensions is 4 pi / |xi|^2.
  auto r = CorrelationModel::riesz(3, 1.0, 1.0);
  CHECK(spectral_density(r, Point{0.0, 0.0, 1.0}).value == doctest::Approx(4.0 * kPi).epsilon(1e-12));
}

TEST_CASE("riesz_h_hat squares to the spectral density") {
  auto r = CorrelationModel::riesz(1, 0.5, 1.0);
  CHECK(riesz_h_hat(r, Point{1.0}).value == doctest::Approx(1.5832334870861).epsilon(1e-11));
  auto r3 = CorrelationModel::riesz(3, 1.7, 0.6);
  std::mt19937_64 eng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    Point xi{u(eng), u(eng), u(eng)};
    double h = riesz_h_hat(r3, xi).value;
    CHECK(h * h == doctest::Approx(spectral_density(r3, xi).value).epsilon(1e-12));
    Point xi2{2 * xi[0], 2 * xi[1], 2 * xi[2]};
    CHECK(riesz_h_hat(r3, xi2).value / h == doctest::Approx(std::pow(2.0, -(3 - 1.7) / 2)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(riesz_h_hat(CorrelationModel::gaussian_h(1, 1.0), Point{1.0}), UnsupportedError);
}

TEST_CASE("Dalang condition verdicts") {
  auto ok = dalang_condition(CorrelationModel::riesz(1, 0.5));
  CHECK(ok.finite);
  REQUIRE(ok.integral.has_value());
  // |S^0| c0 C_{1,1/2} int r^{-1/2}/(1+r^2) dr = 2 sqrt(2 pi) (pi/2)/sin(pi/4).
  CHECK(*ok.integral == doctest::Approx(2.0 * std::sqrt(2.0 * kPi) * (kPi / 2.0) / std::sin(kPi / 4.0)).epsilon(1e-6));

  auto bad = dalang_condition(CorrelationModel::riesz(3, 2.5));
  CHECK_FALSE(bad.finite);
  CHECK_FALSE(bad.integral.has_value());
  CHECK_FALSE(bad.reason.empty());

  auto g = dalang_condition(CorrelationModel::gaussian_h(2, 1.0));
  CHECK(g.finite);
  CHECK(g.quadrature.converged);
  auto c = dalang_condition(CorrelationModel::constant(1, 0.3));
  CHECK(c.finite);
}

TEST_CASE("resolvent at zero") {
  auto c = CorrelationModel::constant(2, 0.7);
  CHECK(resolvent_at_zero(c, 3.0, 1.0) == doctest::Approx(0.7 / 3.0).epsilon(1e-14));

  auto r = CorrelationModel::riesz(1, 0.5);
  // c2 from one quadrature at beta = 1, then the beta^{-3/4} law at 2 and 4.
  const double c2 = resolvent_at_zero(r, 1.0, 1.0);
  CHECK(rel(c2, riesz_resolvent_closed_form(r, 1.0, 1.0)) < 1e-4);
  for (double beta : {2.0, 4.0}) {
    double q = resolvent_at_zero(r, beta, 1.0);
    CHECK(rel(q, c2 * std::pow(beta, -0.75)) < 1e-4);
    CHECK(rel(q, riesz_resolvent_closed_form(r, beta, 1.0)) < 1e-4);
  }

  auto g = CorrelationModel::gaussian_h(1, 1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double beta : {0.1, 0.5, 1.0, 2.0, 8.0, 32.0}) {
    double v = resolvent_at_zero(g, beta, 1.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(resolvent_at_zero(CorrelationModel::riesz(3, 2.5), 1.0, 1.0), DomainError);
}

TEST_CASE("beta R_beta f(0) increases to f(0) for bounded models") {
  auto g = CorrelationModel::gaussian_h(1, 1.0);
  const double f0 = f_at_zero(g);
  double prev = 0.0;
  for (double beta : {1e2, 1e3, 1e4}) {
    double v = beta * resolvent_at_zero(g, beta, 1.0);
    CHECK(v > prev);
    CHECK(v < f0);
    prev = v;
  }
  CHECK(rel(prev, f0) < 1e-3);
}

TEST_CASE("heat-smoothed correlation") {
  auto c = CorrelationModel::constant(1, 1.7);
  for (double s : {0.01, 1.0, 50.0}) CHECK(heat_smoothed_f_at_zero(c, s, 2.0) == 1.7);

  auto r = CorrelationModel::riesz(2, 1.2, 0.8);
  for (double s : {0.1, 1.0, 3.0}) {
    double a = heat_smoothed_f_at_zero(r, s, 1.5);
    double b = heat_smoothed_f_at_zero(r, 4.0 * s, 1.5);
    CHECK(rel(b / a, std::pow(4.0, -0.6)) < 1e-3);
    CHECK(rel(a, heat_smoothed_f_at_zero_exact(r, s, 1.5)) < 1e-6);
  }

  auto g = CorrelationModel::gaussian_h(3, 0.5, 2.0);
  for (double s : {1e-3, 0.1, 1.0, 10.0}) {
    double v = heat_smoothed_f_at_zero(g, s, 1.0);
    CHECK(v <= f_at_zero(g));
    CHECK(rel(v, heat_smoothed_f_at_zero_exact(g, s, 1.0)) < 1e-6);
  }
}

TEST_CASE("cutoff kernel h_n") {
  auto g = CorrelationModel::gaussian_h(2, 1.5);
  CutoffConfig n{2.0};
  CHECK(cutoff_kernel_hn(g, n, Point{2.0, 0.0}) == 0.0);
  CHECK(cutoff_kernel_hn(g, n, Point{0.1, -3.0}) == 0.0);
  CHECK(cutoff_kernel_hn(g, n, Point{0.0, 0.0}) == h_real(g, Point{0.0, 0.0}));
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 200; ++i) {
    Point x{u(eng), u(eng)};
    double hn = cutoff_kernel_hn(g, n, x);
    double h2n = cutoff_kernel_hn(g, CutoffConfig{4.0}, x);
    CHECK(hn >= 0.0);
    CHECK(hn <= h_real(g, x));
    CHECK(h2n >= hn);
  }
}

TEST_CASE("gridded Riesz h_n respects the window and the kernel") {
  LatticeGrid grid(1, 512, 0.25);
  auto r = CorrelationModel::riesz(1, 0.5);
  auto h = gridded_h(r, grid);
  auto hn = gridded_hn(r, grid, CutoffConfig{8.0});
  auto h2n = gridded_hn(r, grid, CutoffConfig{16.0});
  CHECK(hn[0] == h[0]);
  for (std::size_t s = 0; s < grid.sites(); ++s) {
    double x = std::fabs(grid.axis_coordinate(s));
    if (x >= 8.0) CHECK(hn[s] == 0.0);
    if (h[s] > 0.0) {
      CHECK(hn[s] <= h[s]);
      CHECK(h2n[s] >= hn[s]);
    }
  }
  CHECK_THROWS_AS(gridded_hn(r, grid, CutoffConfig{0.1}), DomainError);
}

TEST_CASE("gridded Riesz h convolves to approximately f") {
  // Discrete self-convolution of the gridded kernel against f at moderate lags.
  LatticeGrid grid(1, 1 << 14, 1.0 / 16.0);
  auto r = CorrelationModel::riesz(1, 0.5);
  auto h = gridded_h(r, grid);
  const std::size_t m = grid.sites();
  for (double lag : {1.0, 2.0}) {
    std::size_t j = static_cast<std::size_t>(lag / grid.spacing());
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += h[i] * h[(i + j) % m];
    s *= grid.spacing();
    CHECK(rel(s, std::pow(lag, -0.5)) < 0.1);
  }
}

TEST_CASE("a_t matches a brute-force search over delta") {
  auto brute = [](const CorrelationModel& m, double t, double kappa) {
    auto obj = [&](double delta) {
      double d2 = delta * delta;
      return d2 / (4 * kappa) * std::min(1.0, 4 * kappa * t / d2) * f_radial(m, delta);
    };
    double lo = -3.0, hi = 3.0, best = lo;
    for (int zoom = 0; zoom < 8; ++zoom) {
      double bv = -1.0;
      const int n = 4001;
      for (int i = 0; i < n; ++i) {
        double e = lo + (hi - lo) * i / (n - 1);
        double v = obj(std::pow(10.0, e));
        if (v > bv) {
          bv = v;
          best = e;
        }
      }
      double span = (hi - lo) / 100.0;
      lo = best - span;
      hi = best + span;
    }
    return obj(std::pow(10.0, best));
  };
  for (double t : {0.1, 1.0, 4.0}) {
    auto c = CorrelationModel::constant(1, 0.3);
    CHECK(compute_a_t(c, t, 1.0) == doctest::Approx(0.3 * t).epsilon(1e-14));
    CHECK(rel(compute_a_t(c, t, 1.0), brute(c, t, 1.0)) < 1e-6);
    auto r = CorrelationModel::riesz(2, 1.0, 0.5);
    CHECK(rel(compute_a_t(r, t, 0.7), 0.5 * t * std::pow(4 * 0.7 * t, -0.5)) < 1e-14);
    CHECK(rel(compute_a_t(r, t, 0.7), brute(r, t, 0.7)) < 1e-6);
    auto g = CorrelationModel::gaussian_h(1, 0.8, 1.2);
    CHECK(rel(compute_a_t(g, t, 1.3), brute(g, t, 1.3)) < 1e-6);
  }
  auto g = CorrelationModel::gaussian_h(2, 1.0);
  double prev = 0.0;
  for (double t = 0.05; t < 20.0; t *= 1.5) {
    double a = compute_a_t(g, t, 1.0);
    CHECK(a >= prev);
    prev = a;
  }
}

TEST_CASE("regularized Riesz f(0) is the cell average") {
  auto r1 = CorrelationModel::riesz(1, 0.5, 2.0);
  const double dx = 0.1;
  double avg1 = simpson([&](double x) { return x <= 0 ? 0.0 : 2.0 * std::pow(x, -0.5); }, 0.0, dx / 2, 2000000) / (dx / 2);
  CHECK(regularize_f_at_zero(r1, dx) == doctest::Approx(2.0 * std::pow(dx / 2, -0.5) / 0.5).epsilon(1e-14));
  CHECK(rel(regularize_f_at_zero(r1, dx), avg1) < 2e-3);

  // d = 2, 3 against a midpoint-rule average on a fine sub-grid.
  for (int d : {2, 3}) {
    auto r = CorrelationModel::riesz(d, 1.0);
    const int n = d == 2 ? 2000 : 200;
    double s = 0.0;
    long cnt = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < (d == 3 ? n : 1); ++k) {
          double x = (i + 0.5) / n - 0.5, y = (j + 0.5) / n - 0.5, z = d == 3 ? (k + 0.5) / n - 0.5 : 0.0;
          s += std::pow(x * x + y * y + z * z, -0.5);
          ++cnt;
        }
    double avg = s / cnt;
    CHECK(rel(regularize_f_at_zero(r, 1.0), avg) < 5e-3);
  }
  CHECK(regularize_f_at_zero(CorrelationModel::gaussian_h(1, 1.0), 0.1) ==
        f_at_zero(CorrelationModel::gaussian_h(1, 1.0)));
}

TEST_CASE("positive-definiteness proxy of the covariance matrix") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  auto check_pd = [&](const CorrelationModel& m, const std::vector<Point>& pts, double dx) {
    const std::size_t n = pts.size();
    Eigen::MatrixXd K(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Point z(m.dimension());
        for (int a = 0; a < m.dimension(); ++a) z[a] = pts[i][a] - pts[j][a];
        K(i, j) = i == j ? regularize_f_at_zero(m, dx) : evaluate_f(m, z).value;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * K.trace() / n);
  };
  for (int d : {1, 2}) {
    std::vector<Point> random_pts, lattice_pts;
    for (int i = 0; i < 60; ++i) {
      Point p(d);
      for (auto& v : p) v = u(eng);
      random_pts.push_back(p);
    }
    for (int i = 0; i < 40; ++i) lattice_pts.push_back(Point(d, 0.25 * i));
    check_pd(CorrelationModel::gaussian_h(d, 1.0), random_pts, 0.25);
    check_pd(CorrelationModel::riesz(d, 0.5), lattice_pts, 0.25);
  }
}

TEST_CASE("spectral consistency on a fine torus") {
  // Gaussian: inverse FFT of f^ reproduces f.
  {
    LatticeGrid grid(1, 4096, 1.0 / 32.0);
    auto g = CorrelationModel::gaussian_h(1, 1.0);
    auto fft = fft_for(grid);
    SpectralArray spec = fft->make_spectral();
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = spectral_radial(g, std::sqrt(grid.mode_wavenumber_sq(k)));
    RealArray out = fft->make_real();
    SpectralArray scratch = fft->make_spectral();
    fft->inverse(spec, out, scratch);
    for (std::size_t j : {0, 16, 32, 64, 160}) {
      double f = evaluate_f(g, Point{grid.axis_coordinate(j)}).value;
      CHECK(std::fabs(out[j] / grid.spacing() - f) < 1e-6 * f_at_zero(g));
    }
  }
  // Riesz: zero mode set to the cell average of f^ over |xi| < pi/L.
  {
    LatticeGrid grid(1, 1 << 16, 1.0 / 16.0);
    auto r = CorrelationModel::riesz(1, 0.5);
    auto fft = fft_for(grid);
    SpectralArray spec = fft->make_spectral();
    for (std::size_t k = 1; k < spec.size(); ++k) spec[k] = spectral_radial(r, std::sqrt(grid.mode_wavenumber_sq(k)));
    const double a = kPi / grid.period();
    spec[0] = spectral_radial(r, 1.0) * std::pow(a, -0.5) / 0.5;
    RealArray out = fft->make_real();
    SpectralArray scratch = fft->make_spectral();
    fft->inverse(spec, out, scratch);
    for (double x : {1.0, 2.0, 4.0, 8.0}) {
      std::size_t j = static_cast<std::size_t>(x / grid.spacing());
      CHECK(rel(out[j] / grid.spacing(), std::pow(x, -0.5)) < 0.01);
    }
  }
}

TEST_CASE("model JSON round trip and validation") {
  for (const auto& m : {CorrelationModel::riesz(2, 1.5, 0.3), CorrelationModel::gaussian_h(3, 0.4, 2.0),
                        CorrelationModel::constant(1, 0.25)}) {
    auto back = CorrelationModel::from_json(m.to_json());
    CHECK(back.to_json() == m.to_json());
  }
  auto j = nlohmann::json::parse(R"({"kind":"riesz","d":1,"alpha":0.5})");
  CHECK(CorrelationModel::from_json(j).c0() == 1.0);
  CHECK_THROWS_AS(CorrelationModel::from_json(nlohmann::json::parse(R"({"kind":"riesz","d":1,"alpha":1.5})")), DomainError);
  CHECK_THROWS_AS(CorrelationModel::from_json(nlohmann::json::parse(R"({"kind":"spiral","d":1})")), DomainError);
  CHECK_THROWS_AS(CorrelationModel::from_json(nlohmann::json::parse(R"({"kind":"constant","d":1})")), DomainError);
  CHECK_THROWS_AS(CorrelationModel::riesz(2, 0.0), DomainError);
  CHECK_THROWS_AS(CorrelationModel::gaussian_h(1, -1.0), DomainError);
}
