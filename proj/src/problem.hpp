#pragma once

#include <optional>
#include <string>

#include "expr.hpp"
#include "flux.hpp"
#include "grid.hpp"

namespace fbci {

struct ProblemDescription {
  double T = 0.25;
  double epsilon = 0.1;
  std::string u0 = "1.5*x^2 - x^3";
  std::string b = "0";
  // exactly one of d (function of t) or c (function of x, t) is used; d wins when both are set
  std::optional<std::string> d = std::string("0");
  std::optional<std::string> c;
  std::string f = "0";
};

struct ProblemSpec {
  double T = 0.25;
  double epsilon = 0.1;
  Expr u0_expr, b_expr, d_expr, f_expr;
  // c was declared instead of d: d(t) = c(0, t) - b_x(0, t)
  std::optional<Expr> c_expr;
  bool bx_exact = true;

  double u0(double x) const { return u0_expr.eval(x, 0.0); }
  double u0_dx(double x) const;
  double b(double x, double t) const { return b_expr.eval(x, t); }
  double bx(double x, double t) const;
  double d(double t) const;
  double c(double x, double t) const { return bx(x, t) + d(t); }
  double f(double x, double t) const { return f_expr.eval(x, t); }

  // sup norms by dense sampling over [0,1] x [0,T]
  double b_sup() const;
  double d_sup() const;
};

struct ValidatedProblem {
  ProblemSpec spec;
  double x0 = 0.0;
};

// Builds the spec without structural checks (used by tests with manufactured data).
ProblemSpec make_spec(const ProblemDescription& desc);
ValidatedProblem validate_problem(const ProblemDescription& desc, const PhaseWindow& window);

// P_u(x, t) = d(t) * cumulative trapezoid of u(., t)
Field potential(const Field& u, const ProblemSpec& spec);
// F(x, t) = cumulative trapezoid of f(., t)
Field accumulate_F(const ProblemSpec& spec, const Grid& grid);

}  // namespace fbci
