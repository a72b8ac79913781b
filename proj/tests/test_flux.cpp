#include <doctest.h>

#include <cmath>
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

double brute_distance(const FluxModel& m, const PhaseWindow& w, double s, double g, int samples) {
  double best = INFINITY;
  for (int side = 0; side < 2; ++side) {
    const double a = side ? w.s_plus_r1 : w.s_minus_r1, b = side ? w.s_plus_r2 : w.s_minus_r2;
    for (int k = 0; k <= samples; ++k) {
      const double x = a + (b - a) * k / samples;
      const double y = side ? m.eval_right(x) : m.eval(x);
      best = std::min(best, std::hypot(x - s, y - g));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("reference flux conjugate points") {
  const FluxModel m = reference_flux();
  CHECK(std::abs(m.s1_star - 0.5) < 1e-12);
  CHECK(std::abs(m.s2_star - 2.5) < 1e-12);
  CHECK(std::abs(m.eval(m.s1_star) - m.sigma_s2()) <= 1e-10);
  CHECK(std::abs(m.eval_right(m.s2_star) - m.sigma_s1()) <= 1e-10);
}

TEST_CASE("middle segment is unconstrained") {
  FluxDescription d = default_config().flux;
  d.segments[1].c = {2.0, 0.0, 0.0, 0.0};
  CHECK_NOTHROW(validate_flux(d));
}

TEST_CASE("flux hypothesis violations") {
  FluxDescription d = default_config().flux;
  // sigma(s1) = 1 < sigma(s2) = 2
  d.segments = {{1.0, {0.0, 1.0, 0, 0}}, {2.0, {-1.0, 2.0, 0, 0}}, {INFINITY, {-2.0, 2.0, 0, 0}}};
  CHECK(code_of([&] { validate_flux(d); }) == Errc::SignViolation);

  FluxDescription e = default_config().flux;
  e.segments[2].c = {7.0, -2.0, 0, 0};  // decreasing outer branch
  CHECK_THROWS_AS(validate_flux(e), Error);
}

TEST_CASE("branch inverses") {
  const FluxModel m = reference_flux();
  CHECK(branch_inverse(m, 1.5, Branch::Left) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(branch_inverse(m, 1.5, Branch::Right) == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(branch_inverse(m, 1.0, Branch::Right) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(branch_inverse(m, 2.0, Branch::Right) == doctest::Approx(2.5).epsilon(1e-12));
  double prevl = -1, prevr = -1;
  for (int k = 0; k < 100; ++k) {
    const double r = 1.2 + 0.6 * k / 99.0;
    const double l = branch_inverse(m, r, Branch::Left), q = branch_inverse(m, r, Branch::Right);
    CHECK(std::abs(m.eval(l) - r) <= 1e-10);
    CHECK(std::abs(m.eval_right(q) - r) <= 1e-10);
    CHECK(l > prevl);
    CHECK(q > prevr);
    prevl = l;
    prevr = q;
  }
}

TEST_CASE("phase window") {
  const FluxModel m = reference_flux();
  const PhaseWindow w = build_window(m, 1.2, 1.8);
  CHECK(w.s_minus_r1 == doctest::Approx(0.6));
  CHECK(w.s_minus_r2 == doctest::Approx(0.9));
  CHECK(w.s_plus_r1 == doctest::Approx(2.1));
  CHECK(w.s_plus_r2 == doctest::Approx(2.4));
  CHECK(w.gap == doctest::Approx(1.2));
  CHECK(code_of([&] { build_window(m, 1.5, 1.5); }) == Errc::OutOfRange);
  CHECK(code_of([&] { build_window(m, m.sigma_s2(), 1.8); }) == Errc::OutOfRange);
}

TEST_CASE("modified flux invariants on 1e4 samples") {
  const FluxModel m = reference_flux();
  const PhaseWindow w = build_window(m, 1.2, 1.8);
  const ModifiedFlux sf = build_modified_flux(m, w);
  CHECK(sf.eval(0.6) == doctest::Approx(1.2).epsilon(1e-12));
  CHECK(sf.eval(0.9) < m.eval(0.9));
  const int N = 10000;
  double prev = sf.eval(-1.0);
  const double ds = 5.0 / N;
  for (int k = 1; k <= N; ++k) {
    const double s = -1.0 + ds * k;
    const double v = sf.eval(s);
    const double slope = (v - prev) / ds;
    CHECK(slope >= sf.lambda_tilde - 1e-9);
    CHECK(slope <= sf.Lambda_tilde + 1e-9);
    prev = v;
    if (s <= w.s_minus_r1 || s >= w.s_plus_r2) {
      const double orig = s <= m.s1 ? m.eval(s) : m.eval_right(s);
      CHECK(std::abs(v - orig) <= 1e-12);
    } else if (s > w.s_minus_r1 + 1e-9 && s <= w.s_minus_r2) {
      CHECK(v < m.eval(s));
    } else if (s >= w.s_plus_r1 && s < w.s_plus_r2 - 1e-9) {
      CHECK(v > m.eval_right(s));
    }
  }
  CHECK(sf.lambda_tilde > 0.0);
}

TEST_CASE("distance to K' examples") {
  const FluxModel m = reference_flux();
  const PhaseWindow w = build_window(m, 1.2, 1.8);
  const KPrime kp(m, w);
  auto on = kp.project(0.75, 1.5);
  CHECK(on.distance < 1e-12);
  CHECK_FALSE(on.inside_U);
  auto mid = kp.project(1.5, 1.5);
  CHECK(mid.inside_U);
  CHECK(std::abs(mid.distance - brute_distance(m, w, 1.5, 1.5, 500000)) < 1e-6);
  CHECK_FALSE(kp.inside_U(10.0, 10.0));
  auto free_fn = distance_to_Kprime(w, m, 1.5, 1.5);
  CHECK(free_fn.distance == doctest::Approx(mid.distance));
}

TEST_CASE("distance to K' against brute force on random points of U'") {
  const FluxModel m = reference_flux();
  const PhaseWindow w = build_window(m, 1.2, 1.8);
  const KPrime kp(m, w);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const double g = 1.2 + 0.6 * U(rng);
    const double a = branch_inverse(m, g, Branch::Left), b = branch_inverse(m, g, Branch::Right);
    const double s = a + (b - a) * U(rng);
    CHECK(std::abs(kp.distance(s, g) - brute_distance(m, w, s, g, 500000)) < 1e-6);
  }
}
