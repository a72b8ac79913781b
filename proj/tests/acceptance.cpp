// Acceptance run on the default problem at 256 x 256: one PASS/FAIL line per criterion.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "config.hpp"
#include "densify.hpp"
#include "errors.hpp"
#include "inclusion.hpp"
#include "oscillate.hpp"
#include "parabolic.hpp"
#include "pipeline.hpp"
#include "verify.hpp"

using namespace fbci;

namespace {

constexpr double kPi = std::numbers::pi;

int failures = 0;

void report(int k, bool pass, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

struct Geometry {
  FluxModel m;
  PhaseWindow w;
  ModifiedFlux sf;
  KPrime kp;
  explicit Geometry(const RunConfig& c)
      : m(validate_flux(c.flux)), w(build_window(m, c.r1, c.r2)), sf(build_modified_flux(m, w)), kp(m, w) {}
};

// ---------------------------------------------------------------- 1
void flux_geometry(const RunConfig& cfg) {
  const Geometry G(cfg);
  bool ok = std::abs(G.m.s1_star - 0.5) < 1e-12 && std::abs(G.m.s2_star - 2.5) < 1e-12;
  double inv = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double r = G.w.r1 + (G.w.r2 - G.w.r1) * k / 99.0;
    inv = std::max(inv, std::abs(G.m.eval(branch_inverse(G.m, r, Branch::Left)) - r));
    inv = std::max(inv, std::abs(G.m.eval_right(branch_inverse(G.m, r, Branch::Right)) - r));
  }
  ok = ok && inv <= 1e-10;

  // brute force over the two arcs of K', 10^6 samples in total
  constexpr int kHalf = 500000;
  std::vector<double> xs, ys;
  xs.reserve(2 * kHalf + 2);
  ys.reserve(2 * kHalf + 2);
  for (int side = 0; side < 2; ++side) {
    const double a = side ? G.w.s_plus_r1 : G.w.s_minus_r1, b = side ? G.w.s_plus_r2 : G.w.s_minus_r2;
    for (int k = 0; k <= kHalf; ++k) {
      const double x = a + (b - a) * k / kHalf;
      xs.push_back(x);
      ys.push_back(side ? G.m.eval_right(x) : G.m.eval(x));
    }
  }
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double s = -0.5 + 4.0 * U(rng), g = 0.5 + 2.0 * U(rng);
    double best = std::numeric_limits<double>::infinity();
    for (size_t q = 0; q < xs.size(); ++q) best = std::min(best, std::hypot(xs[q] - s, ys[q] - g));
    worst = std::max(worst, std::abs(G.kp.distance(s, g) - best));
  }
  ok = ok && worst <= 1e-6;
  report(1, ok,
         fmt("s1*=%.12g s2*=%.12g max|sigma(s_r)-r|=%.2e max|dist-brute|=%.2e", G.m.s1_star, G.m.s2_star, inv, worst));
}

// ---------------------------------------------------------------- 2, 3
// u = 0.1 cos(pi x) e^{-t} with the default b and d; |u_x| stays where the modified flux is 2s
ProblemSpec manufactured_spec(const RunConfig& cfg) {
  ProblemDescription p = cfg.problem;
  p.u0 = "0.1*cos(pi*x)";
  p.b = "0.1*x";
  p.d = std::string("0.05");
  p.c.reset();
  p.f = "exp(-t)*((0.2*pi^2 - 0.115)*cos(pi*x) + 0.01*pi*x*sin(pi*x))";
  return make_spec(p);
}

void solver_convergence(const RunConfig& cfg) {
  const Geometry G(cfg);
  const ProblemSpec s = manufactured_spec(cfg);
  double err[3];
  const int Ns[3] = {64, 128, 256};
  for (int k = 0; k < 3; ++k) {
    Grid g(Ns[k], Ns[k], s.T);
    Field u = solve_modified(s, G.sf, g);
    double e = 0.0;
    for (int n = 0; n <= g.nt; ++n)
      for (int i = 0; i <= g.nx; ++i)
        e = std::max(e, std::abs(u(i, n) - 0.1 * std::cos(kPi * g.x(i)) * std::exp(-g.t(n))));
    err[k] = e;
  }
  const double r1 = err[0] / err[1], r2 = err[1] / err[2];
  report(2, r1 >= 3.0 && r2 >= 3.0,
         fmt("errors %.3e %.3e %.3e at 64/128/256, ratios %.2f %.2f", err[0], err[1], err[2], r1, r2));
}

struct IdErr {
  double vx = 0.0, vt = 0.0;
};

IdErr identities(const BaseSubsolution& b, const ProblemSpec& spec, const ModifiedFlux& sf) {
  const Field& u = b.u_star;
  const Field& v = b.v_star;
  const Grid& g = u.grid;
  const double h = g.h(), dt = g.dt();
  const Field P = potential(u, spec);
  const Field F = accumulate_F(spec, g);
  IdErr e;
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 1; i < g.nx; ++i) e.vx = std::max(e.vx, std::abs((v(i + 1, n) - v(i - 1, n)) / (2 * h) - u(i, n)));
  for (int n = 1; n < g.nt; ++n)
    for (int i = 1; i < g.nx; ++i) {
      const double ux = (u(i + 1, n) - u(i - 1, n)) / (2 * h);
      const double G = sf.eval(ux) + spec.b(g.x(i), g.t(n)) * u(i, n) + P(i, n) + F(i, n);
      e.vt = std::max(e.vt, std::abs((v(i, n + 1) - v(i, n - 1)) / (2 * dt) - G));
    }
  return e;
}

void stream_identities(const RunConfig& cfg) {
  const Geometry G(cfg);
  const ValidatedProblem vp = validate_problem(cfg.problem, G.w);
  IdErr e[3];
  const int Ns[3] = {64, 128, 256};
  for (int k = 0; k < 3; ++k) {
    const BaseSubsolution b = build_base(vp.spec, G.m, G.w, G.sf, Grid(Ns[k], Ns[k], vp.spec.T));
    e[k] = identities(b, vp.spec, G.sf);
  }
  const double rx = e[1].vx / e[2].vx, rt = e[1].vt / e[2].vt;
  report(3, rx >= 2.0 && rt >= 2.0,
         fmt("|v_x-u| %.2e %.2e %.2e, |v_t-G| %.2e %.2e %.2e at 64/128/256, ratios %.2f %.2f", e[0].vx, e[1].vx,
             e[2].vx, e[0].vt, e[1].vt, e[2].vt, rx, rt));
}

// ---------------------------------------------------------------- 4
void lemma_suite() {
  // unit square so that ramps slow enough for |phi_t| < eps fit inside Q; the grid resolves a
  // profile when eps^2 > 6 |Q_x| min(l1, l2) h, which the ranges below guarantee
  const Grid g(256, 256, 1.0);
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::uniform_int_distribution<int> W(32, 128), R(128, 256);
  int good = 0;
  double row = 0.0, defect = 0.0;
  std::string first_bad;
  for (int k = 0; k < 20; ++k) {
    const int w = W(rng), r = R(rng);
    const int i0 = static_cast<int>(U(rng) * (g.nx - w)), n0 = static_cast<int>(U(rng) * (g.nt - r));
    const double l1 = 0.1 + 1.4 * U(rng), l2 = 0.1 + 1.4 * U(rng), eps = 0.15 + 0.15 * U(rng);
    ProfileOptions o;
    o.phase = U(rng);
    try {
      OscillationProfile p = build_profile(Rect{i0, i0 + w, n0, n0 + r}, l1, l2, eps, g, o);
      ProfileCheck c = check_profile(p, g);
      row = std::max(row, c.max_row_integral);
      defect = std::max({defect, c.minus_defect / eps, c.plus_defect / eps});
      if (c.all()) ++good;
      else if (first_bad.empty()) first_bad = fmt("profile %d fails a property", k);
    } catch (const Error& e) {
      if (first_bad.empty()) first_bad = fmt("profile %d: %s", k, e.qualified().c_str());
    }
  }
  report(4, good == 20,
         fmt("%d/20 profiles pass (a)-(e), max row integral %.1e, max plateau defect/eps %.3f%s%s", good, row, defect,
             first_bad.empty() ? "" : "; ", first_bad.c_str()));
}

// ---------------------------------------------------------------- 5
void density_contract(const RunConfig& cfg) {
  Pipeline p(cfg);
  p.validate();
  const BaseSubsolution& b = p.solve_base();
  const double eps = cfg.problem.epsilon;
  DensifyContext ctx = make_context(b, p.spec(), p.model(), p.window(), p.kprime(), eps);
  SubsolutionState st{b.u_star, b.v_star, CellMask(b.grid())};
  const double om2 = static_cast<double>(ctx.omega2.count()) * b.grid().cell_area();
  const double base_dist = dist_of(st, ctx);
  const double delta = 0.5 * base_dist / om2;
  StepDiagnostics D;
  std::string why;
  SubsolutionState out = st;
  try {
    out = density_step(st, ctx, delta, cfg.densify.eta0, cfg.densify, 0, D);
    if (!D.success) why = D.failure;
  } catch (const Error& e) {
    why = e.qualified();
  }
  const CellPairs P = residual_pair(out.u, out.v, p.spec(), ctx.F);
  const double after = dist_to_K_integral(P, p.kprime(), ctx.omega2);
  size_t outside = 0;
  for (size_t c = 0; c < P.s.size(); ++c)
    if (ctx.omega2.m[c] && !membership_U(P.s[c], P.g[c], P.ut[c], p.kprime(), ctx.m_star)) ++outside;
  const double drift = std::abs(gauge(P, ctx.omega2, p.kprime()).value - ctx.gamma_ref);
  size_t moved = 0;
  const Grid& g = b.grid();
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      if (!ctx.fixed(i, n)) continue;
      for (int bn = n; bn <= n + 1; ++bn)
        for (int ai = i; ai <= i + 1; ++ai)
          if (out.u(ai, bn) != b.u_star(ai, bn)) ++moved;
    }
  const bool ok = why.empty() && after <= delta * om2 && outside == 0 && drift < 0.5 * eps && moved == 0;
  report(5, ok,
         fmt("dist %.3e -> %.3e (target %.3e), %zu Omega2 cells outside U, gauge drift %.2e, %zu fixed nodes moved%s%s",
             base_dist, after, delta * om2, outside, drift, moved, why.empty() ? "" : "; step: ", why.c_str()));
}

// ---------------------------------------------------------------- 6-9
struct RunOutcome {
  bool c6 = false, c7 = false, c8 = false;
  std::string d6, d7, d8, stop;
  Field u;
};

RunOutcome full_run(RunConfig cfg, std::uint64_t seed) {
  cfg.densify.seed = seed;
  Pipeline p(cfg);
  p.validate();
  const IterationResult& it = p.densify();
  const IterationReport& rep = it.report;
  const Certification c = p.certify();
  RunOutcome o;
  o.u = p.final_u();
  o.stop = rep.stop_reason;

  size_t ok_steps = 0;
  bool decreasing = true;
  for (size_t k = 1; k < rep.dist_trajectory.size(); ++k) decreasing = decreasing && rep.dist_trajectory[k] < rep.dist_trajectory[k - 1];
  for (const auto& s : rep.steps) ok_steps += s.success ? 1 : 0;
  const double phase_frac = c.frac_minus + c.frac_plus;
  o.c6 = ok_steps > 0 && decreasing && phase_frac >= 0.95 && c.theorem.two_phase;
  std::ostringstream t;
  for (double d : rep.dist_trajectory) t << (t.tellp() ? " " : "") << fmt("%.3e", d);
  o.d6 = fmt("%zu successful steps, dist [%s], phase fraction %.3f, one-sided phase measures %.3e / %.3e", ok_steps,
             t.str().c_str(), phase_frac, c.theorem.left_phase_measure, c.theorem.right_phase_measure);

  const TheoremLedger& L = c.theorem;
  o.c7 = L.a() && L.c() && L.d() && c.boundary.initial_exact && c.boundary.neumann;
  o.d7 = fmt("a=%d c=%d d=%d (F+ %d, F- %d, |gamma-Gamma| %.3e), initial dev %.1e, Neumann %.2e <= %.2e", L.a(), L.c(),
             L.d(), L.d_plus, L.d_minus, std::abs(L.gamma_u - L.gamma_ref), c.boundary.initial_dev,
             c.boundary.neumann_dev, c.boundary.neumann_tol);

  o.c8 = c.residual_ok;
  o.d8 = fmt("residual %.3e, C = %.3f (limit %.0f), delta_final %.3e", c.weak.max_residual, c.C, c.C_max, c.delta_final);
  return o;
}

double base_residual(const RunConfig& cfg, int N) {
  const Geometry G(cfg);
  const ValidatedProblem vp = validate_problem(cfg.problem, G.w);
  const BaseSubsolution b = build_base(vp.spec, G.m, G.w, G.sf, Grid(N, N, vp.spec.T));
  return weak_residual(b.u_star, vp.spec, G.sf, cfg.weak).max_residual;
}

}  // namespace

int main() {
  const RunConfig cfg = default_config();
  std::printf("default problem, grid %d x %d, epsilon %g, seeds 1 and 2\n", cfg.nx, cfg.nt, cfg.problem.epsilon);
  auto run1 = std::async(std::launch::async, full_run, cfg, std::uint64_t{1});
  auto run2 = std::async(std::launch::async, full_run, cfg, std::uint64_t{2});

  auto guarded = [](int k, auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      report(k, false, e.qualified());
    } catch (const std::exception& e) {
      report(k, false, e.what());
    }
  };
  guarded(1, [&] { flux_geometry(cfg); });
  guarded(2, [&] { solver_convergence(cfg); });
  guarded(3, [&] { stream_identities(cfg); });
  guarded(4, [&] { lemma_suite(); });
  guarded(5, [&] { density_contract(cfg); });

  RunOutcome a, b;
  bool have = false;
  try {
    a = run1.get();
    b = run2.get();
    have = true;
  } catch (const Error& e) {
    for (int k = 6; k <= 9; ++k) report(k, false, e.qualified());
  }
  if (have) {
    report(6, a.c6, a.d6 + "; stop: " + a.stop);
    report(7, a.c7, a.d7);
    double r128 = 0.0, r256 = 0.0;
    guarded(8, [&] {
      r128 = base_residual(cfg, 128);
      r256 = base_residual(cfg, 256);
    });
    const double ratio = r128 / r256;
    report(8, a.c8 && ratio >= 3.0,
           a.d8 + fmt("; base against modified flux %.3e -> %.3e (ratio %.2f)", r128, r256, ratio));
    double diff = 0.0;
    for (size_t k = 0; k < a.u.v.size() && k < b.u.v.size(); ++k) diff = std::max(diff, std::abs(a.u.v[k] - b.u.v[k]));
    const bool differ = a.u.v.size() != b.u.v.size() || diff > 10.0 * std::numeric_limits<double>::epsilon();
    report(9, differ && a.c6 && a.c7 && a.c8 && b.c6 && b.c7 && b.c8,
           fmt("sup |u1 - u2| = %.3e; seed 2: c6=%d c7=%d c8=%d, stop: %s", diff, b.c6, b.c7, b.c8, b.stop.c_str()));
  }
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
