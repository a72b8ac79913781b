#include <doctest.h>

#include <cmath>
#include <numbers>

#include "errors.hpp"
#include "grid.hpp"

using namespace fbci;

TEST_CASE("grid rejects coarse or degenerate grids") {
  CHECK_THROWS_AS(Grid(8, 32, 1.0), Error);
  CHECK_THROWS_AS(Grid(32, 32, 0.0), Error);
  Grid g(32, 64, 0.5);
  CHECK(g.h() == doctest::Approx(1.0 / 32));
  CHECK(g.dt() == doctest::Approx(0.5 / 64));
  CHECK(g.nodes() == 33u * 65u);
}

TEST_CASE("centered ddx is exact on quadratics and zero on constants") {
  Grid g(64, 16, 1.0);
  Field q = sample(g, "q", [](double x, double) { return x * x; });
  Field d = ddx(q);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 1; i < g.nx; ++i) CHECK(std::abs(d(i, n) - 2.0 * g.x(i)) < 1e-12);
  Field c = ddx(Field(g, "c", 3.0));
  CHECK(c.max_abs() == 0.0);
}

TEST_CASE("ddx is second order on sin(2 pi x)") {
  auto err = [](int nx) {
    Grid g(nx, 16, 1.0);
    Field f = sample(g, "f", [](double x, double) { return std::sin(2 * std::numbers::pi * x); });
    Field d = ddx(f);
    double e = 0.0;
    for (int i = 0; i <= nx; ++i)
      e = std::max(e, std::abs(d(i, 3) - 2 * std::numbers::pi * std::cos(2 * std::numbers::pi * g.x(i))));
    return e;
  };
  const double r = err(64) / err(128);
  CHECK(r > 3.5);
  CHECK(r < 4.5);
}

TEST_CASE("ddt of t^2 and integrals") {
  Grid g(16, 64, 2.0);
  Field f = sample(g, "f", [](double, double t) { return t * t; });
  Field d = ddt(f);
  for (int n = 1; n < g.nt; ++n) CHECK(std::abs(d(4, n) - 2.0 * g.t(n)) < 1e-12);
  CHECK(std::abs(d(4, 0) - 0.0) <= g.dt() + 1e-12);
  CHECK(std::abs(d(4, g.nt) - 2.0 * g.T) <= g.dt() + 1e-12);

  Field one(g, "one", 1.0);
  CHECK(std::abs(integrate_xt(one, CellMask(g, 1)) - g.T) < 1e-12);
  CHECK(std::abs(integrate_x(one, 0, 0.5) - 0.5) < 1e-14);
}

TEST_CASE("integrate_xt is additive over disjoint masks") {
  Grid g(32, 32, 1.0);
  Field f = sample(g, "f", [](double x, double t) { return std::exp(x) * std::cos(3 * t); });
  CellMask a(g), b(g), all(g, 1);
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) ((i + 2 * n) % 3 ? a : b)(i, n) = 1;
  CHECK(std::abs(integrate_xt(f, a) + integrate_xt(f, b) - integrate_xt(f, all)) < 1e-14);
}

TEST_CASE("ddx of the cumulative integral reproduces the integrand") {
  Grid g(128, 16, 1.0);
  Field f = sample(g, "f", [](double x, double) { return std::cos(3 * x); });
  Field d = ddx(cumulative_x(f));
  for (int i = 2; i < g.nx - 1; ++i) CHECK(std::abs(d(i, 5) - f(i, 5)) < 2e-4);
}

TEST_CASE("refinement") {
  Grid g(16, 16, 1.0);
  auto [fg, c] = refine(g, Field(g, "c", 2.5), 2);
  CHECK(fg.nx == 32);
  CHECK(fg.level == 1);
  for (double v : c.v) CHECK(v == 2.5);

  Field a = sample(g, "a", [](double x, double t) { return 3 * x - 2 * t + 1; });
  auto [fa, af] = refine(g, a, 3);
  for (int n = 0; n <= fa.nt; ++n)
    for (int i = 0; i <= fa.nx; ++i) CHECK(std::abs(af(i, n) - (3 * fa.x(i) - 2 * fa.t(n) + 1)) < 1e-13);

  Field s = sample(g, "s", [](double x, double t) { return std::sin(7 * x * t); });
  Field back = restrict_to(refine(g, s, 4).second, g);
  for (size_t k = 0; k < s.v.size(); ++k) CHECK(back.v[k] == s.v[k]);

  CellMask m(g);
  m(3, 4) = 1;
  CellMask mf = refine_mask(m, 2);
  CHECK(mf.count() == 4);
  CHECK(mf(6, 8) == 1);
  CHECK(mf(7, 9) == 1);
}

TEST_CASE("box-scheme cell values on an affine field") {
  Grid g(16, 16, 1.0);
  Field a = sample(g, "a", [](double x, double t) { return 2 * x + 5 * t; });
  for (double v : cell_dx(a)) CHECK(std::abs(v - 2.0) < 1e-12);
  for (double v : cell_dt(a)) CHECK(std::abs(v - 5.0) < 1e-12);
  const auto m = cell_mean(a);
  CHECK(std::abs(m[g.cell(0, 0)] - (2 * 0.5 / 16 + 5 * 0.5 / 16)) < 1e-14);
}
