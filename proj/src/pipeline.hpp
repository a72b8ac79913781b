#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "densify.hpp"
#include "verify.hpp"

namespace fbci {

struct Certification {
  TheoremLedger theorem;
  BoundaryLedger boundary;
  WeakResidual weak;
  double dist_final = 0.0, omega2_measure = 0.0;
  double delta_final = 0.0;  // mean distance to K' over Omega2
  double h = 0.0, dt = 0.0;
  double C = 0.0, C_max = 0.0;
  bool residual_ok = false;
  double frac_minus = 0.0, frac_plus = 0.0, frac_band = 0.0;  // shares of Omega2 cells

  std::vector<CheckLine> lines() const;
  // (a)-(d), initial datum, strips, Neumann and the weak residual; two-phase is reported only
  bool mandatory_pass() const;
};

// Owns one run: validated inputs, base, iterate and certification. Not movable, the
// densify context keeps pointers into it.
class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);
  Pipeline(const Pipeline&) = delete;
  Pipeline& operator=(const Pipeline&) = delete;

  const RunConfig& config() const { return cfg_; }

  void validate();
  bool validated() const { return model_ != nullptr; }
  const FluxModel& model() const;
  const PhaseWindow& window() const;
  const ModifiedFlux& modified() const;
  const KPrime& kprime() const;
  const ProblemSpec& spec() const;
  double x0() const;

  const BaseSubsolution& solve_base();
  void set_base(BaseSubsolution b);
  bool has_base() const { return base_.has_value(); }
  const BaseSubsolution& base() const;

  // runs the schedule from the base (solving it first when needed)
  const IterationResult& densify();
  bool has_iteration() const { return iter_ != nullptr; }
  const IterationResult& iteration() const;

  // final fields from files; the base is refined when the grids differ by an integer factor
  void set_final(Field u, Field v);
  bool has_final() const { return final_u_.has_value(); }
  const Field& final_u() const;
  const Field& final_v() const;

  Certification certify() const;

  nlohmann::json report(const std::optional<Certification>& cert) const;
  nlohmann::json profiles_json() const;
  // residual level of the final state per cell
  std::vector<double> final_level() const;

  // base.json
  void write_base(const std::string& dir) const;
  // everything a full run emits
  void write_all(const std::string& dir, const Certification& cert) const;

 private:
  void need_valid() const;
  const BaseSubsolution& base_for_final() const;

  RunConfig cfg_;
  std::unique_ptr<FluxModel> model_;
  std::unique_ptr<PhaseWindow> window_;
  std::unique_ptr<ModifiedFlux> modified_;
  std::unique_ptr<KPrime> kp_;
  std::unique_ptr<ValidatedProblem> problem_;
  std::optional<BaseSubsolution> base_;
  std::unique_ptr<IterationResult> iter_;
  std::optional<Field> final_u_, final_v_;
  std::optional<BaseSubsolution> refined_base_;
};

}  // namespace fbci
