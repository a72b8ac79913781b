#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace fbci {

// Polynomial c0 + c1 s + c2 s^2 + c3 s^3 on the half-open interval (previous upto, upto].
struct PolySegment {
  double upto = std::numeric_limits<double>::infinity();
  std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
};

struct FluxDescription {
  std::vector<PolySegment> segments;
  double s1 = 0.0;
  double s2 = 0.0;
  double work_lo = -1.0;
  double work_hi = 4.0;
  std::optional<double> lambda_lo;
  std::optional<double> lambda_hi;
};

enum class Branch { Left, Right };

class FluxModel {
 public:
  // segment chosen with (prev, upto]; used on the left branch
  double eval(double s) const;
  // segment chosen with [prev, upto); used on the right branch
  double eval_right(double s) const;
  double eval_branch(double s, Branch b) const { return b == Branch::Left ? eval(s) : eval_right(s); }
  double slope_left(double s) const;
  double slope_right(double s) const;
  // bound on |sigma''| over [a, b] using the polynomial pieces
  double curvature_bound(double a, double b, Branch side) const;
  // breakpoints strictly inside (a, b)
  std::vector<double> breakpoints(double a, double b) const;

  double sigma_s1() const { return eval(s1); }
  double sigma_s2() const { return eval_right(s2); }

  std::vector<PolySegment> segments;
  double s1 = 0.0, s2 = 0.0;
  double s1_star = 0.0, s2_star = 0.0;
  double lambda_lo = 0.0, lambda_hi = 0.0;
  double work_lo = -1.0, work_hi = 4.0;

 private:
  size_t index_left(double s) const;
  size_t index_right(double s) const;
};

FluxModel validate_flux(const FluxDescription& candidate);

// s_r^- on [s1*, s1] or s_r^+ on [s2, s2*] with sigma(s) = r, by bisection.
double branch_inverse(const FluxModel& model, double r, Branch branch);

// Bisection for an increasing function; stops at machine resolution or 200 steps.
template <class F>
double bisect_increasing(F&& g, double lo, double hi, double target) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == target) return mid;
    if (gm < target) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-15 * (1.0 + std::abs(lo))) break;
  }
  const double glo = g(lo), ghi = g(hi);
  return std::abs(glo - target) <= std::abs(ghi - target) ? lo : hi;
}

struct PhaseWindow {
  double r1 = 0.0, r2 = 0.0;
  double s_minus_r1 = 0.0, s_minus_r2 = 0.0;
  double s_plus_r1 = 0.0, s_plus_r2 = 0.0;
  double gap = 0.0;
};

PhaseWindow build_window(const FluxModel& model, double r1, double r2);

class ModifiedFlux {
 public:
  double eval(double s) const;
  double slope(double s) const;

  FluxModel base;
  double s_a = 0.0, s_b = 0.0;     // window ends s^-_{r1}, s^+_{r2}
  double sig_a = 0.0, sig_b = 0.0;  // sigma values there
  double dsig_a = 0.0, dsig_b = 0.0;
  double blend = 0.0;   // L
  double mid_slope = 0.0;  // m
  double lambda_tilde = 0.0, Lambda_tilde = 0.0;
  int fallbacks = 0;
};

ModifiedFlux build_modified_flux(const FluxModel& model, const PhaseWindow& window);

// Geometry of K' (two arcs of the graph over the window) and the lens U' between them.
class KPrime {
 public:
  struct Projection {
    double distance = 0.0;
    double s_bar = 0.0;
    bool inside_U = false;
  };

  KPrime() = default;
  KPrime(const FluxModel& model, const PhaseWindow& window);

  Projection project(double s, double g) const;
  double distance(double s, double g) const;
  bool inside_U(double s, double g) const;
  // distance to the boundary of U' (arcs plus the two horizontal chords)
  double distance_to_boundary(double s, double g) const;
  double diameter() const;

  const std::vector<std::array<double, 2>>& left_arc() const { return left_; }
  const std::vector<std::array<double, 2>>& right_arc() const { return right_; }
  const PhaseWindow& window() const { return w_; }
  const FluxModel& model() const { return m_; }

 private:
  FluxModel m_;
  PhaseWindow w_;
  std::vector<std::array<double, 2>> left_, right_;
};

KPrime::Projection distance_to_Kprime(const PhaseWindow& window, const FluxModel& model,
                                      double s, double g);

}  // namespace fbci
