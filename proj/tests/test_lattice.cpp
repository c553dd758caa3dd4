#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "she/grid.hpp"
#include "she/lattice.hpp"

using namespace she;

TEST_CASE("heat kernel values") {
  CHECK(heat_kernel(1.0, Point{0.0}, 1.0) == doctest::Approx(0.3989422804014327).epsilon(1e-14));
  // (p_1 * p_1)(0) = p_2(0) = 1 / sqrt(4 pi).
  CHECK(heat_kernel(2.0, Point{0.0}, 1.0) == doctest::Approx(0.28209479177387814).epsilon(1e-14));
  CHECK(heat_kernel(0.5, Point{1.0, 1.0}, 2.0) == doctest::Approx(std::exp(-1.0) / (2 * std::numbers::pi)).epsilon(1e-14));
  CHECK_THROWS_AS(heat_kernel(0.0, Point{0.0}, 1.0), DomainError);
  CHECK_THROWS_AS(heat_kernel(-1.0, Point{0.0}, 1.0), DomainError);
}

TEST_CASE("heat kernel semigroup by direct quadrature") {
  // int p_s(x - y) p_t(y) dy = p_{s+t}(x) on a fine Riemann sum.
  const double s = 0.3, t = 0.7, x = 0.8, h = 1e-3;
  double sum = 0.0;
  for (int i = -20000; i <= 20000; ++i) {
    double y = i * h;
    sum += heat_kernel(s, Point{x - y}, 1.5) * heat_kernel(t, Point{y}, 1.5);
  }
  CHECK(sum * h == doctest::Approx(heat_kernel(s + t, Point{x}, 1.5)).epsilon(1e-10));
}

TEST_CASE("grid geometry") {
  LatticeGrid g(2, 16, 0.5);
  CHECK(g.sites() == 256);
  CHECK(g.period() == 8.0);
  CHECK(g.cell_volume() == 0.25);
  CHECK(g.spectral_size() == 16 * 9);
  CHECK(g.axis_coordinate(0) == 0.0);
  CHECK(g.axis_coordinate(7) == 3.5);
  CHECK(g.axis_coordinate(8) == -4.0);
  CHECK(g.axis_coordinate(15) == -0.5);
  CHECK(g.nearest_site(Point{0.0, 0.0}) == 0);
  CHECK(g.nearest_site(Point{8.0, -8.0}) == 0);
  std::size_t s = g.nearest_site(Point{1.0, -0.5});
  auto p = g.site_coordinates(s);
  CHECK(p[0] == 1.0);
  CHECK(p[1] == -0.5);
  CHECK(g.site_radius_sq(s) == 1.25);
  CHECK(LatticeGrid::from_json(g.to_json()) == g);
  CHECK_THROWS_AS(LatticeGrid(4, 16, 0.5), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 12, 0.5), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 4, 0.5), DomainError);
  CHECK_THROWS_AS(LatticeGrid(1, 16, 0.0), DomainError);
}

TEST_CASE("propagator reproduces the heat kernel from a point mass") {
  for (int d : {1, 2}) {
    LatticeGrid g(d, d == 1 ? 512 : 128, 0.125);
    HeatPropagator prop(g, 1.0, 0.5);
    RealArray delta = prop.fft().make_real();
    delta[0] = 1.0 / g.cell_volume();
    RealArray out = apply_propagator(delta, prop);
    for (std::size_t s : {std::size_t{0}, std::size_t{3}, std::size_t{9}}) {
      auto x = g.site_coordinates(s);
      CHECK(out[s] == doctest::Approx(heat_kernel(0.5, x, 1.0)).epsilon(1e-6));
    }
  }
}

TEST_CASE("propagator semigroup, mass and constants") {
  LatticeGrid g(1, 256, 0.25);
  HeatPropagator p1(g, 0.8, 0.1), p2(g, 0.8, 0.2), p3(g, 0.8, 0.3);
  RealArray f = p1.fft().make_real();
  for (std::size_t s = 0; s < g.sites(); ++s) {
    double x = g.axis_coordinate(s);
    f[s] = std::exp(-x * x) + 0.3 * std::sin(2 * std::numbers::pi * 3 * x / g.period());
  }
  RealArray a = apply_propagator(apply_propagator(f, p1), p2);
  RealArray b = apply_propagator(f, p3);
  double mass_f = 0.0, mass_b = 0.0;
  for (std::size_t s = 0; s < g.sites(); ++s) {
    CHECK(a[s] == doctest::Approx(b[s]).epsilon(1e-12));
    mass_f += f[s];
    mass_b += b[s];
  }
  CHECK(mass_b == doctest::Approx(mass_f).epsilon(1e-12));

  RealArray c(g.sites(), 2.5);
  RealArray pc = apply_propagator(c, p3);
  for (double v : pc) CHECK(v == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(p1.multipliers()[0] == 1.0);
  RealArray same = apply_propagator(f, HeatPropagator(g, 1.0, 0.0));
  for (std::size_t s = 0; s < g.sites(); ++s) CHECK(same[s] == doctest::Approx(f[s]).epsilon(1e-13));
  CHECK_THROWS_AS(HeatPropagator(g, 1.0, -0.1), DomainError);
  CHECK_THROWS_AS(HeatPropagator(g, -1.0, 0.1), DomainError);
}

TEST_CASE("d-separation") {
  CHECK(d_separation(Point{0.0, 0.0}, Point{3.0, 1.0}) == 1.0);
  CHECK(d_separation(Point{0.0, 0.0}, Point{3.0, 0.0}) == 0.0);
  CHECK(d_separation(Point{-2.0}, Point{5.0}) == 7.0);
  CHECK(d_separation(Point{1.0}, Point{9.0}, 10.0) == 2.0);
  CHECK(torus_distance(Point{1.0, 1.0}, Point{9.0, 4.0}, 10.0) == doctest::Approx(std::sqrt(13.0)));
}
