#include "pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>

#include "errors.hpp"
#include "inclusion.hpp"
#include "io.hpp"

namespace fbci {

using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json rect_json(const Rect& r) { return {{"i0", r.i0}, {"i1", r.i1}, {"n0", r.n0}, {"n1", r.n1}}; }

json step_json(const StepDiagnostics& d) {
  const DensifyParams& p = d.params;
  json caps = json::array();
  for (double c : p.caps) caps.push_back(c);
  // per-square budget summary and skip reasons
  double emin = 0.0, emax = 0.0, esum = 0.0;
  size_t nbuilt = 0;
  std::map<std::string, size_t> skips;
  for (const SquarePlan& pl : d.plans) {
    if (pl.built) {
      emin = nbuilt ? std::min(emin, pl.eps_i) : pl.eps_i;
      emax = std::max(emax, pl.eps_i);
      esum += pl.eps_i;
      ++nbuilt;
    } else if (!pl.in_I1) {
      std::string why = pl.skipped.empty() ? "not built" : pl.skipped;
      why = why.substr(0, why.find(':'));
      ++skips[why];
    }
  }
  json sk = json::object();
  for (const auto& [k, v] : skips) sk[k] = v;
  return {{"step", d.step},
          {"grid_level", d.grid_level},
          {"params",
           {{"delta", p.delta},
            {"k", p.k},
            {"l", p.l},
            {"kappa", p.kappa},
            {"d_prime", p.d_prime},
            {"m_prime", p.m_prime},
            {"d_doubleprime", p.d_doubleprime},
            {"caps", caps},
            {"halo", p.halo},
            {"rim_dist", p.rim_dist},
            {"rim_budget", p.rim_budget},
            {"osc_bound", p.osc_bound}}},
          {"squares", d.squares},
          {"squares_I1", d.squares_I1},
          {"squares_I2", d.squares_I2},
          {"profiles", d.profiles},
          {"eps_i", {{"count", nbuilt}, {"min", emin}, {"max", emax}, {"mean", nbuilt ? esum / nbuilt : 0.0}}},
          {"skipped", sk},
          {"plateau_minus", d.plateau_minus},
          {"plateau_plus", d.plateau_plus},
          {"dist_before", d.dist_before},
          {"dist_after", d.dist_after},
          {"target", d.target},
          {"gauge_before", d.gauge_before},
          {"gauge_after", d.gauge_after},
          {"sup_change", d.sup_change},
          {"u_dev", d.u_dev},
          {"ut_dev", d.ut_dev},
          {"drift", d.drift},
          {"membership_failures", d.membership_failures},
          {"success", d.success},
          {"failure", d.failure}};
}

json base_summary(const BaseSubsolution& b) {
  json j = base_to_json(b);
  j.erase("u_star");
  j.erase("v_star");
  j["partition"].erase("labels");
  return j;
}

}  // namespace

std::vector<CheckLine> Certification::lines() const {
  std::vector<CheckLine> out = ledger_lines(theorem, boundary);
  out.push_back({"weak_residual", residual_ok,
                 "residual " + fmt(weak.max_residual) + ", C = " + fmt(C) + " (limit " + fmt(C_max) + ")"});
  return out;
}

bool Certification::mandatory_pass() const {
  return theorem.a() && theorem.b() && theorem.c() && theorem.d() && boundary.all() && residual_ok;
}

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {}

void Pipeline::need_valid() const {
  if (!validated()) throw Error(Errc::InvalidArgument, "run not validated");
}

void Pipeline::validate() {
  auto model = std::make_unique<FluxModel>(validate_flux(cfg_.flux));
  auto window = std::make_unique<PhaseWindow>(build_window(*model, cfg_.r1, cfg_.r2));
  auto modified = std::make_unique<ModifiedFlux>(build_modified_flux(*model, *window));
  auto kp = std::make_unique<KPrime>(*model, *window);
  auto problem = std::make_unique<ValidatedProblem>(validate_problem(cfg_.problem, *window));
  model_ = std::move(model);
  window_ = std::move(window);
  modified_ = std::move(modified);
  kp_ = std::move(kp);
  problem_ = std::move(problem);
}

const FluxModel& Pipeline::model() const { return need_valid(), *model_; }
const PhaseWindow& Pipeline::window() const { return need_valid(), *window_; }
const ModifiedFlux& Pipeline::modified() const { return need_valid(), *modified_; }
const KPrime& Pipeline::kprime() const { return need_valid(), *kp_; }
const ProblemSpec& Pipeline::spec() const { return need_valid(), problem_->spec; }
double Pipeline::x0() const { return need_valid(), problem_->x0; }

const BaseSubsolution& Pipeline::solve_base() {
  need_valid();
  base_ = build_base(problem_->spec, *model_, *window_, *modified_, Grid(cfg_.nx, cfg_.nt, cfg_.problem.T));
  iter_.reset();
  final_u_.reset();
  final_v_.reset();
  refined_base_.reset();
  return *base_;
}

void Pipeline::set_base(BaseSubsolution b) {
  base_ = std::move(b);
  iter_.reset();
  final_u_.reset();
  final_v_.reset();
  refined_base_.reset();
}

const BaseSubsolution& Pipeline::base() const {
  if (!base_) throw Error(Errc::InvalidArgument, "no base state");
  return *base_;
}

const IterationResult& Pipeline::densify() {
  need_valid();
  if (!base_) solve_base();
  iter_ = std::make_unique<IterationResult>(
      iterate(*base_, problem_->spec, *model_, *window_, *kp_, cfg_.problem.epsilon, cfg_.densify));
  final_u_ = iter_->state.u;
  final_v_ = iter_->state.v;
  refined_base_.reset();
  return *iter_;
}

const IterationResult& Pipeline::iteration() const {
  if (!iter_) throw Error(Errc::InvalidArgument, "no iteration");
  return *iter_;
}

void Pipeline::set_final(Field u, Field v) {
  if (!(u.grid == v.grid)) throw Error(Errc::InvalidArgument, "final u and v live on different grids");
  const BaseSubsolution& b = base();
  const Grid& bg = b.grid();
  refined_base_.reset();
  if (!(u.grid == bg)) {
    const int f = u.grid.nx / bg.nx;
    if (f < 2 || u.grid.nx != f * bg.nx || u.grid.nt != f * bg.nt || std::abs(u.grid.T - bg.T) > 1e-12 * bg.T)
      throw Error(Errc::InvalidArgument, "final fields are not on a refinement of the base grid");
    refined_base_ = refine_base(b, f, problem_->spec, *model_, *window_);
  }
  final_u_ = std::move(u);
  final_v_ = std::move(v);
  iter_.reset();
}

const Field& Pipeline::final_u() const {
  if (!final_u_) throw Error(Errc::InvalidArgument, "no final state");
  return *final_u_;
}
const Field& Pipeline::final_v() const {
  if (!final_v_) throw Error(Errc::InvalidArgument, "no final state");
  return *final_v_;
}

const BaseSubsolution& Pipeline::base_for_final() const {
  if (iter_) return iter_->base;
  if (refined_base_) return *refined_base_;
  return base();
}

Certification Pipeline::certify() const {
  need_valid();
  const Field& u = final_u();
  const Field& v = final_v();
  const BaseSubsolution& b = base_for_final();
  const double eps = cfg_.problem.epsilon;
  // reference gauge always from the unrefined base
  const double gamma_ref =
      iter_ ? iter_->ctx.gamma_ref : make_context(base(), problem_->spec, *model_, *window_, *kp_, eps).gamma_ref;
  const DensifyContext ctx = make_context(b, problem_->spec, *model_, *window_, *kp_, eps);

  Certification c;
  c.theorem = theorem_checks(u, b, *kp_, eps, gamma_ref, cfg_.band_limit);
  c.boundary = boundary_checks(u, b, problem_->spec);
  c.weak = weak_residual(u, problem_->spec, *model_, cfg_.weak);
  c.dist_final = dist_of(SubsolutionState{u, v, CellMask(u.grid)}, ctx);
  c.omega2_measure = static_cast<double>(ctx.omega2.count()) * u.grid.cell_area();
  c.delta_final = c.omega2_measure > 0.0 ? c.dist_final / c.omega2_measure : 0.0;
  c.h = u.grid.h();
  c.dt = u.grid.dt();
  c.C = c.weak.max_residual / (c.h + c.dt + c.delta_final);
  c.C_max = cfg_.residual_constant;
  c.residual_ok = c.C <= c.C_max;
  if (c.theorem.omega2_cells) {
    const double n = static_cast<double>(c.theorem.omega2_cells);
    c.frac_minus = c.theorem.F_minus / c.theorem.cell_measure / n;
    c.frac_plus = c.theorem.F_plus / c.theorem.cell_measure / n;
    c.frac_band = c.theorem.band_fraction;
  }
  return c;
}

std::vector<double> Pipeline::final_level() const {
  need_valid();
  return residual_pair(final_u(), final_v(), problem_->spec).g;
}

json Pipeline::report(const std::optional<Certification>& cert) const {
  json r;
  r["config"] = to_json(cfg_);
  r["seed"] = cfg_.densify.seed;
  if (validated()) {
    const FluxModel& m = *model_;
    const PhaseWindow& w = *window_;
    const ModifiedFlux& sf = *modified_;
    json left = json::array(), right = json::array();
    for (const auto& p : kp_->left_arc()) left.push_back({p[0], p[1]});
    for (const auto& p : kp_->right_arc()) right.push_back({p[0], p[1]});
    r["flux"] = {{"s1", m.s1},
                 {"s2", m.s2},
                 {"s1_star", m.s1_star},
                 {"s2_star", m.s2_star},
                 {"lambda_lo", m.lambda_lo},
                 {"lambda_hi", m.lambda_hi},
                 {"sigma_s1", m.sigma_s1()},
                 {"sigma_s2", m.sigma_s2()}};
    r["window"] = {{"r1", w.r1},
                   {"r2", w.r2},
                   {"s_minus_r1", w.s_minus_r1},
                   {"s_minus_r2", w.s_minus_r2},
                   {"s_plus_r1", w.s_plus_r1},
                   {"s_plus_r2", w.s_plus_r2},
                   {"gap", w.gap}};
    r["modified_flux"] = {{"blend", sf.blend},
                          {"mid_slope", sf.mid_slope},
                          {"lambda_tilde", sf.lambda_tilde},
                          {"Lambda_tilde", sf.Lambda_tilde},
                          {"fallbacks", sf.fallbacks}};
    r["kprime"] = {{"left_arc", left}, {"right_arc", right}, {"diameter", kp_->diameter()}};
    r["problem"] = {{"x0", problem_->x0}, {"bx_exact", problem_->spec.bx_exact}};
  }
  if (base_) r["base"] = base_summary(*base_);
  if (iter_) {
    const IterationReport& it = iter_->report;
    json sched = json::array();
    for (int j = 0; j < cfg_.densify.steps; ++j)
      sched.push_back({{"j", j}, {"delta", it.delta0 * std::ldexp(1.0, -j)}, {"eta", cfg_.densify.eta0 * std::ldexp(1.0, -j)}});
    json steps = json::array();
    for (const StepDiagnostics& d : it.steps) steps.push_back(step_json(d));
    r["densify"] = {{"baseline_dist", it.baseline_dist},
                    {"omega2_measure", it.omega2_measure},
                    {"delta0", it.delta0},
                    {"schedule", sched},
                    {"cap_policy", cfg_.densify.policy == CapPolicy::Strict ? "strict" : "resolved"},
                    {"refinements", it.refinements},
                    {"final_grid", {{"nx", iter_->state.u.grid.nx}, {"nt", iter_->state.u.grid.nt}}},
                    {"stop_reason", it.stop_reason},
                    {"dist_trajectory", it.dist_trajectory},
                    {"gauge_trajectory", it.gauge_trajectory},
                    {"gamma_ref", iter_->ctx.gamma_ref},
                    {"profiles", it.profiles.size()},
                    {"steps", steps}};
  }
  if (cert) {
    const Certification& c = *cert;
    json lines = json::array();
    for (const CheckLine& l : c.lines()) lines.push_back({{"check", l.name}, {"pass", l.pass}, {"detail", l.detail}});
    r["verify"] = {{"checks", lines},
                   {"mandatory_pass", c.mandatory_pass()},
                   {"weak_residual",
                    {{"max", c.weak.max_residual},
                     {"worst_p", c.weak.worst_p},
                     {"worst_q", c.weak.worst_q},
                     {"worst_s", c.weak.worst_s},
                     {"mass_defect", c.weak.mass_defect},
                     {"projected_cells", c.weak.projected_cells},
                     {"h", c.h},
                     {"dt", c.dt},
                     {"delta_final", c.delta_final},
                     {"C", c.C},
                     {"C_max", c.C_max}}},
                   {"dist_final", c.dist_final},
                   {"phase_fractions", {{"minus", c.frac_minus}, {"plus", c.frac_plus}, {"band", c.frac_band}}},
                   {"gamma_u", c.theorem.gamma_u},
                   {"gamma_ref", c.theorem.gamma_ref},
                   {"two_phase", c.theorem.two_phase}};
  }
  return r;
}

json Pipeline::profiles_json() const {
  json arr = json::array();
  if (!iter_) return arr;
  const IterationReport& it = iter_->report;
  for (size_t k = 0; k < it.profiles.size(); ++k) {
    const OscillationProfile& p = it.profiles[k];
    arr.push_back({{"step", it.profile_step[k]},
                   {"Q", rect_json(p.Q)},
                   {"lambda1", p.lambda1},
                   {"lambda2", p.lambda2},
                   {"epsilon", p.epsilon},
                   {"eps_time", p.eps_time},
                   {"eps_time_psi", p.eps_time_psi},
                   {"nu", p.nu},
                   {"lobe_cells", p.lobe_cells},
                   {"pair_cells", p.pair_cells},
                   {"pairs", p.pairs},
                   {"pad_left", p.pad_left},
                   {"flipped", p.flipped},
                   {"ramp_rows", p.ramp_rows},
                   {"tau", p.tau},
                   {"plateau_minus", p.plateau_minus_measure},
                   {"plateau_plus", p.plateau_plus_measure},
                   {"plateau_minus_target", p.plateau_minus_target},
                   {"plateau_plus_target", p.plateau_plus_target},
                   {"max_phi", p.max_phi},
                   {"max_psi", p.max_psi},
                   {"max_phi_t", p.max_phi_t},
                   {"max_psi_t", p.max_psi_t}});
  }
  return arr;
}

void Pipeline::write_base(const std::string& dir) const {
  ensure_dir(dir);
  write_json((std::filesystem::path(dir) / "base.json").string(), base_to_json(base()));
}

void Pipeline::write_all(const std::string& dir, const Certification& cert) const {
  namespace fs = std::filesystem;
  write_base(dir);
  const Grid& g = final_u().grid;
  write_field_csv((fs::path(dir) / "final_u.csv").string(), final_u());
  write_field_csv((fs::path(dir) / "final_v.csv").string(), final_v());
  write_cell_csv((fs::path(dir) / "final_level.csv").string(), g, final_level());
  write_json((fs::path(dir) / "report.json").string(), report(cert));
  write_json((fs::path(dir) / "profiles.json").string(), profiles_json());
}

}  // namespace fbci
