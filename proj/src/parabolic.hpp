#pragma once

#include <optional>

#include "flux.hpp"
#include "grid.hpp"
#include "problem.hpp"

namespace fbci {

struct SolverOptions {
  int newton_max = 5;
  double newton_tol = 1e-10;
  // a step whose Newton solve stalls is redone as two backward-Euler halves, at most this deep
  int max_halvings = 6;
};

struct SolverStats {
  int steps = 0;
  int newton_total = 0;
  int newton_max_used = 0;
  int fallback_steps = 0;  // steps redone with backward-Euler halves
  int substeps = 0;
  double mass_drift = 0.0;  // only meaningful for conservative data
};

// BDF2 (backward Euler first step) with Newton on the tridiagonal system;
// half-cell finite volumes give the zero-flux condition at x = 0, 1.
Field solve_modified(const ProblemSpec& spec, const ModifiedFlux& sigma_tilde, const Grid& grid,
                     const SolverOptions& opts = {}, SolverStats* stats = nullptr);

// v(x, t) = int_0^x u0 + int_0^t [sigma_tilde(u_x) + b u + P_u + F] (trapezoid in t)
Field stream_function(const Field& u, const ProblemSpec& spec, const ModifiedFlux& sigma_tilde);

enum Region : uint8_t {
  kOmega1 = 1,
  kOmega2 = 2,
  kOmega3 = 3,
  kOmega0Minus = 4,
  kOmega0Plus = 5,
};

struct Partition {
  CellMask label;  // Region code per cell
  double tol = 0.0;
  double delta_star = 0.0;
  int strip_cells = 0;

  CellMask mask(Region r) const;
  size_t count(Region r) const;
};

// tol defaults to 2 h max|u_xx|
Partition partition(const Field& u, const PhaseWindow& window, std::optional<double> tol = std::nullopt);

double base_gauge(const Field& u, const PhaseWindow& window, const FluxModel& model,
                  const ModifiedFlux& sigma_tilde, const Partition& part);

struct BaseSubsolution {
  Field u_star, v_star;
  Partition part;
  double delta_star = 0.0;
  double m_star = 0.0;
  double gamma_base = 0.0;
  SolverStats stats;

  const Grid& grid() const { return u_star.grid; }
};

BaseSubsolution build_base(const ProblemSpec& spec, const FluxModel& model, const PhaseWindow& window,
                           const ModifiedFlux& sigma_tilde, const Grid& grid, const SolverOptions& opts = {},
                           std::optional<double> tol = std::nullopt);

}  // namespace fbci
