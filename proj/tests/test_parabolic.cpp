#include <doctest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "errors.hpp"
#include "parabolic.hpp"

using namespace fbci;
using namespace fbci::test;

namespace {

constexpr double kPi = std::numbers::pi;

struct Fixture {
  FluxModel m = reference_flux();
  PhaseWindow w = build_window(m, 1.2, 1.8);
  ModifiedFlux sf = build_modified_flux(m, w);
};

// u = 0.1 cos(pi x) e^{-t} keeps |u_x| < 0.6 where the modified flux is 2s
ProblemDescription manufactured() {
  ProblemDescription p = zero_problem("0.1*cos(pi*x)");
  p.T = 0.25;
  p.f = "(0.2*pi^2 - 0.1)*cos(pi*x)*exp(-t)";
  return p;
}

double exact(double x, double t) { return 0.1 * std::cos(kPi * x) * std::exp(-t); }

double solve_error(int N) {
  Fixture fx;
  const ProblemSpec s = make_spec(manufactured());
  Grid g(N, N, s.T);
  Field u = solve_modified(s, fx.sf, g);
  double e = 0.0;
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i <= g.nx; ++i) e = std::max(e, std::abs(u(i, n) - exact(g.x(i), g.t(n))));
  return e;
}

struct IdentityErr {
  double vx = 0.0, vt = 0.0;
};

IdentityErr identity_error(int N) {
  Fixture fx;
  const ProblemSpec s = make_spec(manufactured());
  Grid g(N, N, s.T);
  Field u = solve_modified(s, fx.sf, g);
  Field v = stream_function(u, s, fx.sf);
  IdentityErr r;
  const double h = g.h(), dt = g.dt();
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 1; i < g.nx; ++i)
      r.vx = std::max(r.vx, std::abs((v(i + 1, n) - v(i - 1, n)) / (2 * h) - u(i, n)));
  // v_t against the exact total flux 2 u_x + F
  for (int n = 0; n < g.nt; ++n)
    for (int i = 1; i < g.nx; ++i) {
      const double tm = g.t(n) + 0.5 * dt, x = g.x(i);
      const double G = -0.2 * kPi * std::sin(kPi * x) * std::exp(-tm) +
                       (0.2 * kPi * kPi - 0.1) * std::sin(kPi * x) / kPi * std::exp(-tm);
      r.vt = std::max(r.vt, std::abs((v(i, n + 1) - v(i, n)) / dt - G));
    }
  return r;
}

}  // namespace

TEST_CASE("rest state stays at rest") {
  Fixture fx;
  const ProblemSpec s = make_spec(zero_problem("0.7"));
  Grid g(32, 32, 0.25);
  Field u = solve_modified(s, fx.sf, g);
  for (double a : u.v) CHECK(std::abs(a - 0.7) < 1e-12);
}

TEST_CASE("mass conservation") {
  Fixture fx;
  auto drift = [&](const std::string& b, int N) {
    ProblemDescription p = zero_problem();
    p.b = b;
    SolverStats st;
    solve_modified(make_spec(p), fx.sf, Grid(N, N, p.T), {}, &st);
    CHECK(st.steps == N);
    return std::abs(st.mass_drift);
  };
  CHECK(drift("0", 128) < 1e-12);
  // b u_x + b_x u is differenced in advective form, so the drift is truncation error only
  const double d64 = drift("0.1*x*(1 - x)", 64), d128 = drift("0.1*x*(1 - x)", 128);
  CHECK(d128 < 1e-6);
  CHECK(d64 / d128 >= 3.0);
}

TEST_CASE("manufactured solution converges at second order") {
  const double e32 = solve_error(32), e64 = solve_error(64), e128 = solve_error(128);
  MESSAGE("errors " << e32 << " " << e64 << " " << e128);
  CHECK(e64 / e128 >= 3.0);
  CHECK(e32 / e64 >= 3.0);
}

TEST_CASE("stream function identities converge") {
  const IdentityErr a = identity_error(32), b = identity_error(64), c = identity_error(128);
  MESSAGE("v_x-u " << a.vx << " " << b.vx << " " << c.vx << "  v_t-G " << a.vt << " " << b.vt << " " << c.vt);
  CHECK(b.vx / c.vx >= 2.0);
  CHECK(b.vt / c.vt >= 2.0);
  Fixture fx;
  const ProblemSpec s = make_spec(manufactured());
  Grid g(32, 32, s.T);
  Field v = stream_function(solve_modified(s, fx.sf, g), s, fx.sf);
  for (int n = 0; n <= g.nt; ++n) CHECK(v(0, n) == 0.0);
}

TEST_CASE("partition of the default datum at t = 0") {
  Fixture fx;
  ProblemDescription p = zero_problem();
  p.b = "0.1*x";
  p.d = std::string("0.05");
  const ProblemSpec s = make_spec(p);
  Grid g(256, 256, p.T);
  BaseSubsolution b = build_base(s, fx.m, fx.w, fx.sf, g);
  int first = -1, last = -1;
  for (int i = 0; i < g.nx; ++i)
    if (b.part.label(i, 0) == kOmega2) {
      if (first < 0) first = i;
      last = i;
    }
  const double xl = 0.5 * (1 - std::sqrt(0.2)), xr = 0.5 * (1 + std::sqrt(0.2));
  // tol band around s = 0.6 plus one cell
  const double slack = b.part.tol / 1.34 + 2 * g.h();
  CHECK(std::abs(first * g.h() - xl) < slack);
  CHECK(std::abs((last + 1) * g.h() - xr) < slack);
  CHECK(b.part.count(kOmega3) == 0);
  CHECK(b.part.count(kOmega1) > 0);
  CHECK(b.delta_star > 0.0);
  CHECK(b.gamma_base > 0.0);
  CHECK(b.gamma_base < 1.0);
  CHECK(b.m_star > 1.0);
}

TEST_CASE("gauge is stable under refinement") {
  Fixture fx;
  ProblemDescription p = zero_problem();
  p.b = "0.1*x";
  p.d = std::string("0.05");
  const ProblemSpec s = make_spec(p);
  const double g128 = build_base(s, fx.m, fx.w, fx.sf, Grid(128, 128, p.T)).gamma_base;
  const double g256 = build_base(s, fx.m, fx.w, fx.sf, Grid(256, 256, p.T)).gamma_base;
  MESSAGE("gamma " << g128 << " " << g256);
  CHECK(std::abs(g128 - g256) < 0.02);
}

TEST_CASE("flat datum has no transition region") {
  Fixture fx;
  Grid g(32, 32, 0.25);
  Field u(g, "u", 0.3);
  CHECK_THROWS_AS(partition(u, fx.w), Error);
  Field slope = sample(g, "s", [](double x, double) { return 0.1 * x; });
  try {
    partition(slope, fx.w);
    FAIL("expected EmptyTransitionRegion");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyTransitionRegion);
  }
}
