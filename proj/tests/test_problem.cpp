#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "common.hpp"
#include "errors.hpp"

using namespace fbci;
using namespace fbci::test;

namespace {
Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::InvalidArgument;
}
}  // namespace

TEST_CASE("default-shaped datum is valid with x0 = 0.5") {
  const PhaseWindow w = reference_window();
  const ValidatedProblem v = validate_problem(zero_problem(), w);
  CHECK(v.x0 == doctest::Approx(0.5));
  CHECK(v.spec.u0_dx(0.5) == doctest::Approx(0.75));
}

TEST_CASE("problem violations") {
  const PhaseWindow w = reference_window();
  CHECK(code_of([&] { validate_problem(zero_problem("x"), w); }) == Errc::CompatibilityViolation);
  CHECK(code_of([&] { validate_problem(zero_problem("0"), w); }) == Errc::NoTransitionPoint);
  ProblemDescription p = zero_problem();
  p.d.reset();
  p.c = "x^2";  // c - b_x depends on x
  CHECK(code_of([&] { validate_problem(p, w); }) == Errc::StructureViolation);
  ProblemDescription q = zero_problem();
  q.d = std::string("x");
  CHECK(code_of([&] { validate_problem(q, w); }) == Errc::StructureViolation);
}

TEST_CASE("c declared instead of d") {
  ProblemDescription p = zero_problem();
  p.b = "0.1*x";
  p.d.reset();
  p.c = "0.15";
  const ValidatedProblem v = validate_problem(p, reference_window());
  CHECK(v.spec.d(0.1) == doctest::Approx(0.05));
  CHECK(v.spec.c(0.3, 0.1) == doctest::Approx(0.15));
  CHECK(v.spec.bx_exact);
}

TEST_CASE("potential operator") {
  Grid g(32, 16, 1.0);
  ProblemDescription p = zero_problem();
  Field u = sample(g, "u", [](double x, double t) { return std::sin(5 * x) + t; });
  CHECK(potential(u, make_spec(p)).max_abs() == 0.0);

  p.d = std::string("1");
  Field one(g, "one", 1.0);
  Field P1 = potential(one, make_spec(p));
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i <= g.nx; ++i) CHECK(std::abs(P1(i, n) - g.x(i)) < 1e-14);

  p.d = std::string("2");
  Field x = sample(g, "x", [](double xx, double) { return xx; });
  Field P2 = potential(x, make_spec(p));
  for (int i = 0; i <= g.nx; ++i) CHECK(std::abs(P2(i, 3) - g.x(i) * g.x(i)) < 1e-14);
  for (int n = 0; n <= g.nt; ++n) CHECK(P2(0, n) == 0.0);
}

TEST_CASE("potential is linear and local") {
  Grid g(32, 16, 1.0);
  ProblemDescription p = zero_problem();
  p.d = std::string("0.5 + t");
  const ProblemSpec s = make_spec(p);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 1.0);
  Field a(g, "a"), b(g, "b"), c(g, "c");
  for (size_t k = 0; k < a.v.size(); ++k) {
    a.v[k] = N(rng);
    b.v[k] = N(rng);
    c.v[k] = 2.0 * a.v[k] - 3.0 * b.v[k];
  }
  Field Pa = potential(a, s), Pb = potential(b, s), Pc = potential(c, s);
  for (size_t k = 0; k < a.v.size(); ++k) CHECK(std::abs(Pc.v[k] - (2 * Pa.v[k] - 3 * Pb.v[k])) < 1e-12);

  // changing u right of node 10 leaves P up to node 10 alone
  Field d = a;
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 11; i <= g.nx; ++i) d(i, n) += 5.0;
  Field Pd = potential(d, s);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i <= 10; ++i) CHECK(Pd(i, n) == Pa(i, n));
}

TEST_CASE("accumulated source") {
  Grid g(64, 16, 1.0);
  ProblemDescription p = zero_problem();
  CHECK(accumulate_F(make_spec(p), g).max_abs() == 0.0);
  p.f = "1";
  Field F1 = accumulate_F(make_spec(p), g);
  for (int i = 0; i <= g.nx; ++i) CHECK(std::abs(F1(i, 2) - g.x(i)) < 1e-14);
  p.f = "cos(pi*x)";
  Field F2 = accumulate_F(make_spec(p), g);
  double err = 0.0;
  for (int i = 0; i <= g.nx; ++i)
    err = std::max(err, std::abs(F2(i, 5) - std::sin(std::numbers::pi * g.x(i)) / std::numbers::pi));
  CHECK(err < g.h() * g.h());
  for (int n = 0; n <= g.nt; ++n) CHECK(F2(0, n) == 0.0);
}

TEST_CASE("coefficient sup norms by sampling") {
  ProblemDescription p = zero_problem();
  p.b = "0.1*x";
  p.d = std::string("0.05");
  const ProblemSpec s = make_spec(p);
  CHECK(s.b_sup() == doctest::Approx(0.1));
  CHECK(s.d_sup() == doctest::Approx(0.05));
}
