#include <doctest.h>

#include <cmath>

#include "common.hpp"
#include "inclusion.hpp"
#include "parabolic.hpp"

using namespace fbci;
using namespace fbci::test;

namespace {

// u = s x + 0.3 t, v = s x^2 / 2 + r t, so the cell pair is (s, r) and u_t = 0.3
std::pair<Field, Field> affine_state(const Grid& g, double s, double r) {
  Field u = sample(g, "u", [&](double x, double t) { return s * x + 0.3 * t; });
  Field v = sample(g, "v", [&](double x, double t) { return 0.5 * s * x * x + r * t; });
  return {u, v};
}

}  // namespace

TEST_CASE("residual pair of an affine state") {
  Grid g(32, 32, 0.25);
  const ProblemSpec s = make_spec(zero_problem());
  auto [u, v] = affine_state(g, 0.8, 1.5);
  CellPairs p = residual_pair(u, v, s);
  for (size_t k = 0; k < p.s.size(); ++k) {
    CHECK(std::abs(p.s[k] - 0.8) < 1e-12);
    CHECK(std::abs(p.g[k] - 1.5) < 1e-12);
    CHECK(std::abs(p.ut[k] - 0.3) < 1e-12);
  }
}

TEST_CASE("residual pair subtracts b u, P_u and F") {
  Grid g(32, 32, 0.25);
  ProblemDescription d = zero_problem();
  d.b = "2";
  const ProblemSpec s = make_spec(d);
  Field u(g, "u", 0.5);
  Field v = sample(g, "v", [](double x, double t) { return 0.5 * x + 1.0 * t; });
  CellPairs p = residual_pair(u, v, s);
  for (double a : p.g) CHECK(std::abs(a - 0.0) < 1e-12);  // 1 - 2 * 0.5
}

TEST_CASE("membership in U' and the wide lens") {
  const FluxModel m = reference_flux();
  const KPrime kp(m, build_window(m, 1.2, 1.8));
  CHECK(membership_U(1.5, 1.5, 0.0, kp, 1.0));
  CHECK_FALSE(membership_U(1.5, 1.5, 2.0, kp, 1.0));
  CHECK_FALSE(membership_U(0.75, 1.5, 0.0, kp, 1.0));  // on the left branch
  CHECK_FALSE(membership_U(1.5, 1.9, 0.0, kp, 1.0));   // level outside the window
  CHECK(inside_U0(1.5, 1.9, m));
  CHECK_FALSE(inside_U0(1.5, 2.1, m));
  CHECK_FALSE(inside_U0(0.1, 1.5, m));
}

TEST_CASE("distance integral vanishes on K' and scales with area") {
  const FluxModel m = reference_flux();
  const KPrime kp(m, build_window(m, 1.2, 1.8));
  const ProblemSpec s = make_spec(zero_problem());
  Grid g(32, 32, 0.25);
  CellMask all(g, 1);
  {
    auto [u, v] = affine_state(g, 0.75, 1.5);
    CHECK(dist_to_K_integral(residual_pair(u, v, s), kp, all) < 1e-12);
  }
  auto [u, v] = affine_state(g, 1.5, 1.5);
  const double d = kp.distance(1.5, 1.5);
  CHECK(dist_to_K_integral(residual_pair(u, v, s), kp, all) == doctest::Approx(d * 0.25));
  CHECK(dist_to_K_integral(residual_pair(u, v, s), kp, CellMask(g)) == 0.0);
}

TEST_CASE("gauge of pure phases") {
  const FluxModel m = reference_flux();
  const PhaseWindow w = build_window(m, 1.2, 1.8);
  const KPrime kp(m, w);
  const ProblemSpec s = make_spec(zero_problem());
  Grid g(16, 16, 0.25);
  CellMask all(g, 1);
  {
    auto [u, v] = affine_state(g, 0.75, 1.5);
    GaugeReport r = gauge(residual_pair(u, v, s), all, kp);
    CHECK(r.value == doctest::Approx(0.0));
    CHECK(r.F_minus == doctest::Approx(0.25));
    CHECK(r.F_plus == 0.0);
  }
  {
    auto [u, v] = affine_state(g, 2.25, 1.5);
    GaugeReport r = gauge(residual_pair(u, v, s), all, kp);
    CHECK(r.value == doctest::Approx(1.0));
    CHECK(r.F_plus == doctest::Approx(0.25));
  }
  {
    // midpoint of the lens at level 1.5
    auto [u, v] = affine_state(g, 1.5, 1.5);
    GaugeReport r = gauge(residual_pair(u, v, s), all, kp);
    CHECK(r.value == doctest::Approx(0.5));
    CHECK(r.band_cells == g.cells());
  }
  {
    auto [u, v] = affine_state(g, 1.5, 2.5);  // above sigma(s1): no transition cells
    CHECK(gauge(residual_pair(u, v, s), all, kp).value == -1.0);
  }
}

TEST_CASE("solution gauge projects the unstable band") {
  const FluxModel m = reference_flux();
  const KPrime kp(m, build_window(m, 1.2, 1.8));
  Grid g(16, 16, 0.25);
  CellMask all(g, 1);
  std::vector<double> ux(g.cells(), 1.2);  // nearer s1 = 1, level 2, left end
  GaugeReport r = solution_gauge(ux, g, all, kp);
  CHECK(r.projected_cells == g.cells());
  CHECK(r.value == doctest::Approx(0.0));
  std::fill(ux.begin(), ux.end(), 1.9);  // nearer s2 = 2, level 1, right end
  CHECK(solution_gauge(ux, g, all, kp).value == doctest::Approx(1.0));
}
