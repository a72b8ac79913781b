#pragma once

#include <string>
#include <vector>

#include "flux.hpp"
#include "grid.hpp"
#include "parabolic.hpp"
#include "problem.hpp"

namespace fbci {

struct WeakResidualOptions {
  int max_p = 4;  // zeta = cos(p pi x) t^q
  int max_q = 2;
  int time_samples = 8;
};

struct WeakResidual {
  double max_residual = 0.0;  // normalised by max|zeta| + max|zeta_x| + max|zeta_t|
  int worst_p = 0, worst_q = 0;
  double worst_s = 0.0;
  double mass_defect = 0.0;  // zeta = 1, unnormalised
  size_t projected_cells = 0;  // cells with u_x strictly between s1 and s2
  size_t evaluations = 0;
};

// Weak form against the original flux; u_x inside (s1, s2) is projected to the nearer end.
WeakResidual weak_residual(const Field& u, const ProblemSpec& spec, const FluxModel& model,
                           const WeakResidualOptions& opts = {});
// Same, against the monotone flux of the modified problem.
WeakResidual weak_residual(const Field& u, const ProblemSpec& spec, const ModifiedFlux& sigma_tilde,
                           const WeakResidualOptions& opts = {});

struct TheoremLedger {
  // (a)
  size_t fixed_mismatch = 0;
  double u_dev = 0.0, ut_dev = 0.0;
  bool a_fixed = false, a_sup = false, a_time = false;
  // (b)
  size_t omega1_violations = 0, omega3_violations = 0;
  size_t omega2_cells = 0, omega2_band = 0;
  double band_fraction = 0.0;
  bool b_omega1 = false, b_omega2 = false, b_omega3 = false;
  // (c)
  size_t zero_minus_cells = 0, zero_plus_cells = 0;
  double c_minus_dev = 0.0, c_plus_dev = 0.0;
  bool c_minus = false, c_plus = false;
  // (d)
  double gamma_u = -1.0, gamma_ref = 0.0;
  double F_plus = 0.0, F_minus = 0.0, omega2_measure = 0.0, cell_measure = 0.0;
  bool d_plus = false, d_minus = false, d_gamma = false, d_counts = false;
  // two-phase indicator over the whole domain
  double left_phase_measure = 0.0, right_phase_measure = 0.0;
  bool two_phase = false;

  bool a() const { return a_fixed && a_sup && a_time; }
  bool b() const { return b_omega1 && b_omega2 && b_omega3; }
  bool c() const { return c_minus && c_plus; }
  bool d() const { return d_plus && d_minus && d_gamma && d_counts; }
};

// gamma_ref is the gauge of the base subsolution; band_limit the allowed share of Omega^2 cells off both phases.
TheoremLedger theorem_checks(const Field& u, const BaseSubsolution& base, const KPrime& kp, double epsilon,
                             double gamma_ref, double band_limit = 0.05);

struct BoundaryLedger {
  double initial_dev = 0.0;
  size_t strip_mismatch = 0;
  double neumann_dev = 0.0, neumann_tol = 0.0;
  bool initial_exact = false, strips_exact = false, neumann = false;
  bool all() const { return initial_exact && strips_exact && neumann; }
};

BoundaryLedger boundary_checks(const Field& u, const BaseSubsolution& base, const ProblemSpec& spec);

// named pass/fail lines, in a fixed order
struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};
std::vector<CheckLine> ledger_lines(const TheoremLedger& th, const BoundaryLedger& bd);

}  // namespace fbci
