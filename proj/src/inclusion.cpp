#include "inclusion.hpp"

#include <algorithm>
#include <cmath>

namespace fbci {

CellPairs residual_pair(const Field& u, const Field& v, const ProblemSpec& spec) {
  return residual_pair(u, v, spec, accumulate_F(spec, u.grid));
}

CellPairs residual_pair(const Field& u, const Field& v, const ProblemSpec& spec, const Field& F) {
  const Grid& g = u.grid;
  const Field P = potential(u, spec);
  Field rest(g, "bu_P_F");
  for (int n = 0; n <= g.nt; ++n) {
    const double t = g.t(n);
    for (int i = 0; i <= g.nx; ++i) rest(i, n) = spec.b(g.x(i), t) * u(i, n) + P(i, n) + F(i, n);
  }
  CellPairs out;
  out.grid = g;
  out.s = cell_dx(u);
  out.ut = cell_dt(u);
  out.g = cell_dt(v);
  const std::vector<double> r = cell_mean(rest);
  for (size_t k = 0; k < out.g.size(); ++k) out.g[k] -= r[k];
  return out;
}

bool membership_U(double s, double g, double ut, const KPrime& kp, double m_star) {
  return std::abs(ut) < m_star && kp.inside_U(s, g);
}

bool inside_U0(double s, double g, const FluxModel& model) {
  if (!(g > model.sigma_s2() && g < model.sigma_s1())) return false;
  return s > branch_inverse(model, g, Branch::Left) && s < branch_inverse(model, g, Branch::Right);
}

double dist_to_K_integral(const CellPairs& p, const KPrime& kp, const CellMask& region) {
  double acc = 0.0;
  for (size_t k = 0; k < p.s.size(); ++k)
    if (region.m[k]) acc += kp.distance(p.s[k], p.g[k]);
  return acc * p.grid.cell_area();
}

namespace {

void phase_counts(double s, const PhaseWindow& w, GaugeReport& r) {
  if (s >= w.s_plus_r1 && s <= w.s_plus_r2) ++r.F_plus_cells;
  else if (s >= w.s_minus_r1 && s <= w.s_minus_r2) ++r.F_minus_cells;
  else ++r.band_cells;
}

void finish(GaugeReport& r, double zsum, size_t ztot, size_t ecount, double area) {
  r.E_measure = static_cast<double>(ecount) * area;
  r.transition_measure = static_cast<double>(ztot) * area;
  r.F_plus = static_cast<double>(r.F_plus_cells) * area;
  r.F_minus = static_cast<double>(r.F_minus_cells) * area;
  if (ztot == 0) {
    r.value = -1.0;
    r.z_min = r.z_max = r.z_mean = 0.0;
  } else {
    r.z_mean = zsum / static_cast<double>(ztot);
    r.value = r.z_mean;
  }
}

}  // namespace

GaugeReport gauge(const CellPairs& p, const CellMask& E, const KPrime& kp) {
  const FluxModel& m = kp.model();
  const double lo = m.sigma_s2(), hi = m.sigma_s1();
  constexpr double tol = 1e-12;
  GaugeReport r;
  r.z_min = 1.0;
  r.z_max = 0.0;
  double zsum = 0.0;
  size_t ztot = 0, ecount = 0;
  for (size_t k = 0; k < p.s.size(); ++k) {
    if (!E.m[k]) continue;
    ++ecount;
    phase_counts(p.s[k], kp.window(), r);
    const double gk = p.g[k];
    if (gk < lo - tol || gk > hi + tol) continue;  // outside the transition set
    const double lev = std::clamp(gk, lo, hi);
    const double sm = branch_inverse(m, lev, Branch::Left), sp = branch_inverse(m, lev, Branch::Right);
    if (p.s[k] < sm - tol || p.s[k] > sp + tol) continue;
    const double z = std::clamp((p.s[k] - sm) / (sp - sm), 0.0, 1.0);
    zsum += z;
    ++ztot;
    r.z_min = std::min(r.z_min, z);
    r.z_max = std::max(r.z_max, z);
  }
  finish(r, zsum, ztot, ecount, p.grid.cell_area());
  return r;
}

GaugeReport solution_gauge(const std::vector<double>& ux, const Grid& grid, const CellMask& E, const KPrime& kp) {
  const FluxModel& m = kp.model();
  const double lo = m.sigma_s2(), hi = m.sigma_s1();
  GaugeReport r;
  r.z_min = 1.0;
  r.z_max = 0.0;
  double zsum = 0.0;
  size_t ztot = 0, ecount = 0;
  for (size_t k = 0; k < ux.size(); ++k) {
    if (!E.m[k]) continue;
    ++ecount;
    phase_counts(ux[k], kp.window(), r);
    double s = ux[k];
    if (s > m.s1 && s < m.s2) {
      s = (s - m.s1 <= m.s2 - s) ? m.s1 : m.s2;
      ++r.projected_cells;
    }
    const double lev = s <= m.s1 ? m.eval(s) : m.eval_right(s);
    if (lev < lo || lev > hi) continue;
    const double sm = branch_inverse(m, lev, Branch::Left), sp = branch_inverse(m, lev, Branch::Right);
    const double z = std::clamp((s - sm) / (sp - sm), 0.0, 1.0);
    zsum += z;
    ++ztot;
    r.z_min = std::min(r.z_min, z);
    r.z_max = std::max(r.z_max, z);
  }
  finish(r, zsum, ztot, ecount, grid.cell_area());
  return r;
}

}  // namespace fbci
