#pragma once

#include <vector>

#include "flux.hpp"
#include "grid.hpp"
#include "problem.hpp"

namespace fbci {

// Residual pair (u_x, v_t - b u - P_u - F) and u_t on every cell.
struct CellPairs {
  Grid grid;
  std::vector<double> s, g, ut;
};

CellPairs residual_pair(const Field& u, const Field& v, const ProblemSpec& spec);
CellPairs residual_pair(const Field& u, const Field& v, const ProblemSpec& spec, const Field& F);

struct SubsolutionState {
  Field u, v;
  CellMask omega;  // cells where the state may differ from the base
};

// strictly inside U' and |u_t| < m*
bool membership_U(double s, double g, double ut, const KPrime& kp, double m_star);
// diagnostic: strictly inside the wide lens U_0 over [sigma(s2), sigma(s1)]
bool inside_U0(double s, double g, const FluxModel& model);

// sum over region cells of dist(pair, K') times the cell area
double dist_to_K_integral(const CellPairs& pairs, const KPrime& kp, const CellMask& region);

struct GaugeReport {
  double value = -1.0;
  double F_plus = 0.0;   // measure of cells with u_x in [s^+_{r1}, s^+_{r2}]
  double F_minus = 0.0;  // measure of cells with u_x in [s^-_{r1}, s^-_{r2}]
  size_t F_plus_cells = 0, F_minus_cells = 0, band_cells = 0;
  double z_min = 0.0, z_max = 0.0, z_mean = 0.0;
  double E_measure = 0.0;
  double transition_measure = 0.0;
  size_t projected_cells = 0;
};

// Transition gauge with the residual level of the subsolution.
GaugeReport gauge(const CellPairs& pairs, const CellMask& E, const KPrime& kp);
// Gauge of a solution: level sigma(u_x); u_x inside (s1, s2) is projected to the nearer branch end.
GaugeReport solution_gauge(const std::vector<double>& ux, const Grid& grid, const CellMask& E, const KPrime& kp);

}  // namespace fbci
