#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flux.hpp"
#include "inclusion.hpp"
#include "oscillate.hpp"
#include "parabolic.hpp"
#include "problem.hpp"

namespace fbci {

// "strict" enforces every per-square cap; "resolved" floors the amplitude caps at what the
// grid can carry, keeps the time-derivative caps, and picks square sizes by trial builds.
enum class CapPolicy { Strict, Resolved };

struct DensifyConfig {
  int steps = 4;
  double delta0_factor = 0.5;  // delta_0 = factor * baseline dist / |Omega2|
  std::optional<double> delta0;
  double eta0 = 0.05;
  std::uint64_t seed = 0;
  CapPolicy policy = CapPolicy::Resolved;
  int max_refinements = 1;
  int min_square = 8;
  int halo = 2;
};

// Everything a step needs that does not change between steps on one grid.
struct DensifyContext {
  const ProblemSpec* spec = nullptr;
  const FluxModel* model = nullptr;
  const PhaseWindow* window = nullptr;
  const KPrime* kp = nullptr;
  double epsilon = 0.1;
  double m_star = 0.0;
  double gamma_ref = 0.0;  // residual-level gauge of the base state on Omega2
  double b_sup = 0.0, d_sup = 0.0;
  Field u_star, v_star;
  CellMask omega2;  // cells of Omega2
  CellMask fixed;   // Omega1, Omega3 and the lateral strips: never touched
  std::vector<double> ut_star;
  Field F;
};

struct DensifyParams {
  double delta = 0.0;
  int k = 6;
  int l = 0;
  double kappa = 0.0;
  double d_prime = 0.0, m_prime = 0.0, d_doubleprime = 0.0;
  double caps[6] = {0, 0, 0, 0, 0, 0};  // eta/drift, m'/4, osc, kappa, diam, d''
  int halo = 0;
  double rim_dist = 0.0, rim_budget = 0.0;
  double osc_bound = 0.0;
};

struct SquarePlan {
  Rect Q;
  bool in_I1 = false;
  double s = 0.0, gamma = 0.0, c = 0.0;
  double s_bar = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;          // ray distances at the center
  double lambda1_used = 0.0, lambda2_used = 0.0;  // after the block minimum
  int lobe_step = 1;
  double eps_i = 0.0, eps_time = 0.0;
  double dist_before = 0.0, dist_after = 0.0;
  bool built = false;
  std::string skipped;  // reason when no profile was built
};

struct StepDiagnostics {
  int step = 0;
  int grid_level = 0;
  DensifyParams params;
  size_t squares = 0, squares_I1 = 0, squares_I2 = 0, profiles = 0;
  std::vector<SquarePlan> plans;
  double plateau_minus = 0.0, plateau_plus = 0.0;
  double dist_before = 0.0, dist_after = 0.0, target = 0.0;
  double gauge_before = -1.0, gauge_after = -1.0;
  double sup_change = 0.0;
  double u_dev = 0.0, ut_dev = 0.0, drift = 0.0;
  size_t membership_failures = 0;
  bool success = false;
  std::string failure;  // module-qualified code and reason
};

// ray distance from (s, g) to the locus dist = r, leftwards (Branch::Left) or rightwards
double ray_to_locus(const KPrime& kp, double s, double g, double r, Branch side);

// smallest integer l above the lower bound for the window
int l_lower_bound(const PhaseWindow& w);
// largest level step keeping both branch inverses within target
double kappa_for(const FluxModel& model, const PhaseWindow& w, double target);

// Omega2 minus a halo (and minus a halo around the boundary of omega_w); reports the distance mass
// left outside. Throws HaloExhausted when strict and that mass exceeds the budget.
CellMask choose_core(const CellPairs& pairs, const CellMask& omega2, const CellMask& omega_w, const KPrime& kp,
                     double budget, int halo, double* rim_dist, bool strict);

// greedy packing with power-of-two multiples of min_square
std::vector<Rect> pack_squares(const CellMask& G, int min_square);

DensifyContext make_context(const BaseSubsolution& base, const ProblemSpec& spec, const FluxModel& model,
                            const PhaseWindow& window, const KPrime& kp, double epsilon);

double dist_of(const SubsolutionState& st, const DensifyContext& ctx);

// one density pass; on any failed check the input state is returned untouched
// (built still receives the profiles that were tried)
SubsolutionState density_step(const SubsolutionState& state, const DensifyContext& ctx, double delta, double eta,
                              const DensifyConfig& cfg, int step_index, StepDiagnostics& diag,
                              std::vector<OscillationProfile>* built = nullptr);

struct IterationReport {
  double baseline_dist = 0.0, omega2_measure = 0.0, delta0 = 0.0;
  std::vector<StepDiagnostics> steps;
  std::vector<double> dist_trajectory, gauge_trajectory;
  int refinements = 0;
  std::string stop_reason;
  std::vector<OscillationProfile> profiles;
  std::vector<int> profile_step;
};

struct IterationResult {
  SubsolutionState state;
  DensifyContext ctx;
  BaseSubsolution base;  // possibly refined
  IterationReport report;
};

IterationResult iterate(const BaseSubsolution& base, const ProblemSpec& spec, const FluxModel& model,
                        const PhaseWindow& window, const KPrime& kp, double epsilon, const DensifyConfig& cfg);

// Base state on the refined grid: u*, v* re-solved there (so the initial datum stays exact),
// region labels split cell-wise from the coarse partition, gamma_base kept.
BaseSubsolution refine_base(const BaseSubsolution& base, int factor, const ProblemSpec& spec, const FluxModel& model,
                            const PhaseWindow& window);

}  // namespace fbci
