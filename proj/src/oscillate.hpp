#pragma once

#include <optional>
#include <vector>

#include "grid.hpp"
#include "inclusion.hpp"

namespace fbci {

// Cell-aligned rectangle: cells [i0, i1) x [n0, n1), nodes i0..i1 x n0..n1.
struct Rect {
  int i0 = 0, i1 = 0, n0 = 0, n1 = 0;
  int width() const { return i1 - i0; }
  int height() const { return n1 - n0; }
  bool contains_cell(int i, int n) const { return i >= i0 && i < i1 && n >= n0 && n < n1; }
  bool overlaps(const Rect& o) const { return i0 < o.i1 && o.i0 < i1 && n0 < o.n1 && o.n0 < n1; }
};

struct ProfileOptions {
  // budget for |phi_t| and |psi_t|; defaults to epsilon
  std::optional<double> eps_time;
  // separate budget for |psi_t|; defaults to eps_time
  std::optional<double> eps_time_psi;
  // seeded phase in [0, 1): the upper half starts with the negative lobe (a half-period shift),
  // the fractional part places the teeth inside the leftover zero-slope cells
  double phase = 0.0;
  int min_ramp_rows = 2;
  // upper bound on the lobe height; the smallest resolvable lobe is used when it is below that
  std::optional<double> max_height;
  // only lobe lengths (in cells) that are multiples of this are tried
  int lobe_step = 1;
};

// Slopes l1' <= l1, l2' <= l2 whose lobe fills whole cells: n cells of -l1', a cells of +l2'.
struct CommensurateSlopes {
  double lambda1 = 0.0, lambda2 = 0.0;
  int rise = 1, fall = 1;
};
CommensurateSlopes commensurate_slopes(double l1, double l2, int max_cells = 12);

struct OscillationProfile {
  Rect Q;
  double lambda1 = 0.0, lambda2 = 0.0;
  double epsilon = 0.0, eps_time = 0.0, eps_time_psi = 0.0;
  double nu = 0.0;  // lobe height, equal to max |f|
  int rise_cells = 0, fall_cells = 0;
  double rise_rem = 0.0, fall_rem = 0.0;  // partial-cell slopes
  int lobe_cells = 0, pair_cells = 0, pairs = 0, pad_left = 0;
  bool flipped = false;
  int ramp_rows = 0;
  double tau = 0.0;

  std::vector<double> f;      // nodes i0..i1
  std::vector<double> Psi;    // cumulative trapezoid of f
  std::vector<double> hcut;   // rows n0..n1
  std::vector<double> slope;  // cells i0..i1-1

  double plateau_minus_measure = 0.0, plateau_plus_measure = 0.0;
  double plateau_minus_target = 0.0, plateau_plus_target = 0.0;
  double max_phi = 0.0, max_psi = 0.0, max_phi_t = 0.0, max_psi_t = 0.0;

  double phi(int i, int n) const { return hcut[n - Q.n0] * f[i - Q.i0]; }
  double psi(int i, int n) const { return hcut[n - Q.n0] * Psi[i - Q.i0]; }
};

// One full cell of the gentler slope per lobe; the steeper side may sit in a partial cell.
double min_lobe_height(double l1, double l2, double h);
// smallest budget epsilon for which a lobe of the minimal period fits in width Lx
double resolvable_budget(double l1, double l2, double h, double Lx);

OscillationProfile build_profile(const Rect& Q, double lambda1, double lambda2, double epsilon, const Grid& grid,
                                 const ProfileOptions& opts = {});

// Measured Lemma properties of a profile, evaluated on its own grid.
struct ProfileCheck {
  bool a_bounds = false;       // |phi|, |psi|, |phi_t|, |psi_t| below the budgets
  bool b_slopes = false;       // -lambda1 <= phi_x <= lambda2 on every cell
  bool c_plateaus = false;     // plateau measures within epsilon of their targets
  bool d_stream = false;       // psi_x = phi in the trapezoid sense
  bool e_zero_mean = false;    // per-row trapezoid integral of phi vanishes
  bool boundary_zero = false;  // phi = psi = 0 on the boundary nodes of Q
  double max_row_integral = 0.0;
  double max_stream_defect = 0.0;
  double minus_defect = 0.0, plus_defect = 0.0;
  bool all() const { return a_bounds && b_slopes && c_plateaus && d_stream && e_zero_mean && boundary_zero; }
};

ProfileCheck check_profile(const OscillationProfile& p, const Grid& grid);

// u += sum phi_i, v += sum psi_i; omega grows by the rectangles.
void superpose(SubsolutionState& state, const std::vector<OscillationProfile>& profiles, const CellMask& allowed);

}  // namespace fbci
