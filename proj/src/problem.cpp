#include "problem.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace fbci {

namespace {
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}
}  // namespace

double ProblemSpec::u0_dx(double x) const {
  double v, dx;
  u0_expr.eval_dx(x, 0.0, v, dx);
  return dx;
}

double ProblemSpec::bx(double x, double t) const {
  double v, dx;
  b_expr.eval_dx(x, t, v, dx);
  return dx;
}

double ProblemSpec::d(double t) const {
  if (c_expr) return c_expr->eval(0.0, t) - bx(0.0, t);
  return d_expr.eval(0.0, t);
}

double ProblemSpec::b_sup() const {
  double m = 0.0;
  for (int n = 0; n <= 200; ++n)
    for (int i = 0; i <= 1000; ++i) m = std::max(m, std::abs(b(i / 1000.0, T * n / 200.0)));
  return m;
}

double ProblemSpec::d_sup() const {
  double m = 0.0;
  for (int n = 0; n <= 10000; ++n) m = std::max(m, std::abs(d(T * n / 10000.0)));
  return m;
}

ProblemSpec make_spec(const ProblemDescription& desc) {
  if (!(desc.T > 0.0)) throw Error(Errc::ConfigError, "T must be positive");
  if (!(desc.epsilon > 0.0)) throw Error(Errc::ConfigError, "epsilon must be positive");
  ProblemSpec s;
  s.T = desc.T;
  s.epsilon = desc.epsilon;
  s.u0_expr = Expr::parse(desc.u0);
  s.b_expr = Expr::parse(desc.b);
  s.f_expr = Expr::parse(desc.f);
  if (desc.d) {
    s.d_expr = Expr::parse(*desc.d);
  } else if (desc.c) {
    s.c_expr = Expr::parse(*desc.c);
  } else {
    s.d_expr = Expr::constant(0.0);
  }
  if (s.u0_expr.uses_t()) throw Error(Errc::ConfigError, "u0 must not depend on t");
  return s;
}

ValidatedProblem validate_problem(const ProblemDescription& desc, const PhaseWindow& w) {
  ValidatedProblem out;
  out.spec = make_spec(desc);
  const ProblemSpec& s = out.spec;

  const double g0 = s.u0_dx(0.0), g1 = s.u0_dx(1.0);
  if (std::abs(g0) > 1e-10 || std::abs(g1) > 1e-10)
    throw Error(Errc::CompatibilityViolation,
                "u0'(0) = " + num(g0) + ", u0'(1) = " + num(g1) + " (need 0)");

  // c - b_x must not depend on x
  if (desc.d && s.d_expr.uses_x()) throw Error(Errc::StructureViolation, "d must be a function of t only");
  if (s.c_expr) {
    for (int n = 0; n <= 50; ++n) {
      const double t = s.T * n / 50.0;
      const double ref = s.d(t);
      for (int i = 0; i <= 200; ++i) {
        const double x = i / 200.0;
        const double dev = s.c_expr->eval(x, t) - s.bx(x, t) - ref;
        if (std::abs(dev) > 1e-10)
          throw Error(Errc::StructureViolation,
                      "c - b_x varies in x (deviation " + num(dev) + " at x=" + num(x) + ", t=" + num(t) + ")");
      }
    }
  }

  // transition point with the widest margin inside (s^-_{r1}, s^+_{r2})
  double best = 0.0;
  bool found = false;
  for (int i = 1; i < 10000; ++i) {
    const double x = i / 10000.0;
    const double g = s.u0_dx(x);
    const double margin = std::min(g - w.s_minus_r1, w.s_plus_r2 - g);
    if (margin > 0.0 && (!found || margin > best)) {
      best = margin;
      out.x0 = x;
      found = true;
    }
  }
  if (!found)
    throw Error(Errc::NoTransitionPoint, "u0' never enters (" + num(w.s_minus_r1) + ", " + num(w.s_plus_r2) + ")");
  return out;
}

Field potential(const Field& u, const ProblemSpec& spec) {
  Field P = cumulative_x(u);
  P.name = "P_" + u.name;
  const Grid& g = u.grid;
  for (int n = 0; n <= g.nt; ++n) {
    const double dn = spec.d(g.t(n));
    for (int i = 0; i <= g.nx; ++i) P(i, n) *= dn;
  }
  return P;
}

Field accumulate_F(const ProblemSpec& spec, const Grid& grid) {
  Field f = sample(grid, "f", [&](double x, double t) { return spec.f(x, t); });
  Field F = cumulative_x(f);
  F.name = "F";
  return F;
}

}  // namespace fbci
