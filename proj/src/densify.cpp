#include "densify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace fbci {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// per-square offset in [0, 1), independent of the order squares are visited
double phase_fraction(std::uint64_t seed, int step, const Rect& q) {
  std::uint64_t h = splitmix(seed);
  for (int v : {step, q.i0, q.n0, q.width()}) h = splitmix(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
  std::mt19937_64 rng(h);
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::vector<Rect> quarters(const Rect& q) {
  const int hi = q.width() / 2, ht = q.height() / 2;
  return {{q.i0, q.i0 + hi, q.n0, q.n0 + ht},
          {q.i0 + hi, q.i1, q.n0, q.n0 + ht},
          {q.i0, q.i0 + hi, q.n0 + ht, q.n1},
          {q.i0 + hi, q.i1, q.n0 + ht, q.n1}};
}

struct Trial {
  bool ok = false;
  double dist = 0.0;
  std::string reason;
};

struct Choice {
  SquarePlan plan;
  std::optional<OscillationProfile> profile;
};

class Stepper {
 public:
  Stepper(const SubsolutionState& st, const DensifyContext& ctx, const CellPairs& pairs, double r, bool strict)
      : ctx_(ctx), P_(pairs), g_(st.u.grid), r_(r), strict_(strict) {
    lam1_.assign(g_.cells(), kNaN);
    lam2_.assign(g_.cells(), kNaN);
  }

  double cell_dist(int i, int n) const {
    const size_t c = g_.cell(i, n);
    return ctx_.kp->distance(P_.s[c], P_.g[c]);
  }

  double block_dist(const Rect& q) const {
    double acc = 0.0;
    for (int n = q.n0; n < q.n1; ++n)
      for (int i = q.i0; i < q.i1; ++i) acc += cell_dist(i, n);
    return acc * g_.cell_area();
  }

  bool oscillation_ok(const Rect& q, double bound, double ut_bound) const {
    double smin = 1e300, smax = -1e300, gmin = 1e300, gmax = -1e300, tmin = 1e300, tmax = -1e300;
    for (int n = q.n0; n < q.n1; ++n)
      for (int i = q.i0; i < q.i1; ++i) {
        const size_t c = g_.cell(i, n);
        smin = std::min(smin, P_.s[c]);
        smax = std::max(smax, P_.s[c]);
        gmin = std::min(gmin, P_.g[c]);
        gmax = std::max(gmax, P_.g[c]);
        tmin = std::min(tmin, P_.ut[c]);
        tmax = std::max(tmax, P_.ut[c]);
      }
    return smax - smin <= bound && gmax - gmin <= bound && tmax - tmin <= ut_bound;
  }

  SquarePlan plan_for(const Rect& q) const {
    SquarePlan p;
    p.Q = q;
    const int ci = q.i0 + q.width() / 2 - 1, cn = q.n0 + q.height() / 2 - 1;
    for (int n = cn; n <= cn + 1; ++n)
      for (int i = ci; i <= ci + 1; ++i) {
        const size_t c = g_.cell(i, n);
        p.s += 0.25 * P_.s[c];
        p.gamma += 0.25 * P_.g[c];
        p.c += 0.25 * P_.ut[c];
      }
    p.dist_before = block_dist(q);
    p.dist_after = p.dist_before;
    const auto pr = ctx_.kp->project(p.s, p.gamma);
    if (pr.distance <= r_) {
      p.in_I1 = true;
      p.s_bar = pr.s_bar;
      return p;
    }
    if (!ctx_.kp->inside_U(p.s, p.gamma)) {
      if (strict_)
        throw Error(Errc::RayEscape, "square center (" + std::to_string(p.s) + ", " + std::to_string(p.gamma) +
                                         ") lies outside U'");
      p.skipped = "center outside U'";
      return p;
    }
    p.lambda1 = ray_to_locus(*ctx_.kp, p.s, p.gamma, r_, Branch::Left);
    p.lambda2 = ray_to_locus(*ctx_.kp, p.s, p.gamma, r_, Branch::Right);
    p.lambda1_used = p.lambda1;
    p.lambda2_used = p.lambda2;
    return p;
  }

  // smallest per-cell ray distance over the block
  void robust_slopes(SquarePlan& p) {
    for (int n = p.Q.n0; n < p.Q.n1; ++n)
      for (int i = p.Q.i0; i < p.Q.i1; ++i) {
        const size_t c = g_.cell(i, n);
        if (std::isnan(lam1_[c])) {
          if (ctx_.kp->distance(P_.s[c], P_.g[c]) <= r_ || !ctx_.kp->inside_U(P_.s[c], P_.g[c])) {
            lam1_[c] = lam2_[c] = 0.0;
          } else {
            lam1_[c] = ray_to_locus(*ctx_.kp, P_.s[c], P_.g[c], r_, Branch::Left);
            lam2_[c] = ray_to_locus(*ctx_.kp, P_.s[c], P_.g[c], r_, Branch::Right);
          }
        }
        p.lambda1_used = std::min(p.lambda1_used, lam1_[c]);
        p.lambda2_used = std::min(p.lambda2_used, lam2_[c]);
      }
  }

  // residual pairs on Q after adding the profile, without touching the state
  Trial evaluate(const OscillationProfile& p) const {
    Trial t;
    const Rect& Q = p.Q;
    const double h = g_.h(), dt = g_.dt();
    const ProblemSpec& spec = *ctx_.spec;
    auto extra = [&](int i, int n) { return spec.b(g_.x(i), g_.t(n)) * p.phi(i, n) + spec.d(g_.t(n)) * p.psi(i, n); };
    double acc = 0.0;
    for (int n = Q.n0; n < Q.n1; ++n)
      for (int i = Q.i0; i < Q.i1; ++i) {
        const size_t c = g_.cell(i, n);
        const double ds = 0.5 * ((p.phi(i + 1, n) - p.phi(i, n)) + (p.phi(i + 1, n + 1) - p.phi(i, n + 1))) / h;
        const double dut = 0.5 * ((p.phi(i, n + 1) - p.phi(i, n)) + (p.phi(i + 1, n + 1) - p.phi(i + 1, n))) / dt;
        const double dvt = 0.5 * ((p.psi(i, n + 1) - p.psi(i, n)) + (p.psi(i + 1, n + 1) - p.psi(i + 1, n))) / dt;
        const double dm = 0.25 * (extra(i, n) + extra(i + 1, n) + extra(i, n + 1) + extra(i + 1, n + 1));
        const double s = P_.s[c] + ds, gg = P_.g[c] + dvt - dm, ut = P_.ut[c] + dut;
        if (!membership_U(s, gg, ut, *ctx_.kp, ctx_.m_star)) {
          std::ostringstream os;
          os << "trial leaves U at cell (" << i << ", " << n << "): pair (" << s << ", " << gg << "), u_t " << ut;
          t.reason = os.str();
          return t;
        }
        acc += ctx_.kp->distance(s, gg);
      }
    t.ok = true;
    t.dist = acc * g_.cell_area();
    return t;
  }

  const Grid& grid() const { return g_; }

 private:
  const DensifyContext& ctx_;
  const CellPairs& P_;
  const Grid& g_;
  double r_;
  bool strict_;
  std::vector<double> lam1_, lam2_;
};

bool is_refinement_error(Errc c) {
  return c == Errc::UnresolvableSawtooth || c == Errc::BudgetInfeasible || c == Errc::HaloExhausted ||
         c == Errc::OscillationUnresolvable;
}

}  // namespace

double ray_to_locus(const KPrime& kp, double s, double g, double r, Branch side) {
  const double arc = branch_inverse(kp.model(), g, side);
  const double dir = side == Branch::Left ? -1.0 : 1.0;
  const double len = std::abs(s - arc);
  auto d = [&](double t) { return kp.distance(s + dir * t, g); };
  if (d(0.0) <= r) return 0.0;
  constexpr int kSamples = 256;
  double lo = 0.0, hi = len;
  for (int k = 1; k <= kSamples; ++k) {
    const double t = len * k / kSamples;
    if (d(t) <= r) {
      hi = t;
      break;
    }
    lo = t;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (d(mid) > r) lo = mid;
    else hi = mid;
  }
  const double t = 0.5 * (lo + hi);
  if (std::abs(d(t) - r) > 1e-8) throw Error(Errc::RayEscape, "ray bisection missed the locus");
  return t;
}

int l_lower_bound(const PhaseWindow& w) {
  const double gap = w.s_plus_r1 - w.s_minus_r2;
  const double bound = 34.0 * (w.s_plus_r2 - w.s_minus_r1) / (gap * gap);
  return static_cast<int>(std::floor(bound)) + 1;
}

double kappa_for(const FluxModel& model, const PhaseWindow& w, double target) {
  constexpr int kLevels = 4096;
  double lip = 0.0;
  for (Branch b : {Branch::Left, Branch::Right}) {
    double prev = branch_inverse(model, w.r1, b);
    for (int k = 1; k <= kLevels; ++k) {
      const double r = w.r1 + (w.r2 - w.r1) * k / kLevels;
      const double cur = branch_inverse(model, r, b);
      lip = std::max(lip, std::abs(cur - prev) / ((w.r2 - w.r1) / kLevels));
      prev = cur;
    }
  }
  return target / lip;
}

CellMask choose_core(const CellPairs& pairs, const CellMask& omega2, const CellMask& omega_w, const KPrime& kp,
                     double budget, int halo, double* rim_dist, bool strict) {
  const int nx = omega2.nx, nt = omega2.nt;
  CellMask G(nx, nt);
  for (int n = 0; n < nt; ++n)
    for (int i = 0; i < nx; ++i) {
      if (!omega2(i, n)) continue;
      bool ok = true, seen_in = false, seen_out = false;
      for (int dn = -halo; dn <= halo && ok; ++dn)
        for (int di = -halo; di <= halo; ++di) {
          const int a = i + di, b = n + dn;
          if (a < 0 || a >= nx || b < 0 || b >= nt || !omega2(a, b)) {
            ok = false;
            break;
          }
          if (omega_w(a, b)) seen_in = true;
          else seen_out = true;
        }
      if (ok && !(seen_in && seen_out)) G(i, n) = 1;
    }
  double rim = 0.0;
  for (size_t c = 0; c < G.m.size(); ++c)
    if (omega2.m[c] && !G.m[c]) rim += kp.distance(pairs.s[c], pairs.g[c]);
  rim *= pairs.grid.cell_area();
  if (rim_dist) *rim_dist = rim;
  if (strict && rim > budget) {
    std::ostringstream os;
    os << "distance mass " << rim << " outside the core exceeds " << budget << " with a " << halo << "-cell halo";
    throw Error(Errc::HaloExhausted, os.str());
  }
  return G;
}

std::vector<Rect> pack_squares(const CellMask& G, int min_square) {
  const int nx = G.nx, nt = G.nt;
  std::vector<uint8_t> cov(G.m.size(), 0);
  auto fits = [&](int i, int n, int e) {
    if (i + e > nx || n + e > nt) return false;
    for (int b = n; b < n + e; ++b)
      for (int a = i; a < i + e; ++a) {
        const size_t c = static_cast<size_t>(b) * nx + a;
        if (!G.m[c] || cov[c]) return false;
      }
    return true;
  };
  std::vector<Rect> out;
  for (int n = 0; n < nt; ++n)
    for (int i = 0; i < nx; ++i) {
      const size_t c = static_cast<size_t>(n) * nx + i;
      if (!G.m[c] || cov[c]) continue;
      int E = 0;
      for (int e = min_square; fits(i, n, e); e *= 2) E = e;
      if (E == 0) continue;
      out.push_back({i, i + E, n, n + E});
      for (int b = n; b < n + E; ++b)
        for (int a = i; a < i + E; ++a) cov[static_cast<size_t>(b) * nx + a] = 1;
    }
  return out;
}

DensifyContext make_context(const BaseSubsolution& base, const ProblemSpec& spec, const FluxModel& model,
                            const PhaseWindow& window, const KPrime& kp, double epsilon) {
  DensifyContext ctx;
  ctx.spec = &spec;
  ctx.model = &model;
  ctx.window = &window;
  ctx.kp = &kp;
  ctx.epsilon = epsilon;
  ctx.m_star = base.m_star;
  ctx.u_star = base.u_star;
  ctx.v_star = base.v_star;
  ctx.omega2 = base.part.mask(kOmega2);
  const Grid& g = base.grid();
  ctx.fixed = CellMask(g);
  const int strip = base.part.strip_cells;
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      const uint8_t lab = base.part.label(i, n);
      if (lab == kOmega1 || lab == kOmega3 || i < strip || i >= g.nx - strip) ctx.fixed(i, n) = 1;
    }
  ctx.ut_star = cell_dt(base.u_star);
  ctx.F = accumulate_F(spec, g);
  ctx.b_sup = spec.b_sup();
  ctx.d_sup = spec.d_sup();
  ctx.gamma_ref = gauge(residual_pair(base.u_star, base.v_star, spec, ctx.F), ctx.omega2, kp).value;
  return ctx;
}

double dist_of(const SubsolutionState& st, const DensifyContext& ctx) {
  return dist_to_K_integral(residual_pair(st.u, st.v, *ctx.spec, ctx.F), *ctx.kp, ctx.omega2);
}

SubsolutionState density_step(const SubsolutionState& st, const DensifyContext& ctx, double delta, double eta,
                              const DensifyConfig& cfg, int step_index, StepDiagnostics& D,
                              std::vector<OscillationProfile>* built) {
  const Grid& g = st.u.grid;
  const KPrime& kp = *ctx.kp;
  const bool strict = cfg.policy == CapPolicy::Strict;
  const double area = g.cell_area();
  const double eps = ctx.epsilon;

  D = StepDiagnostics{};
  D.step = step_index;
  D.grid_level = g.level;
  DensifyParams& prm = D.params;
  prm.delta = delta;

  const CellPairs P = residual_pair(st.u, st.v, *ctx.spec, ctx.F);
  const double om2 = static_cast<double>(ctx.omega2.count()) * area;
  D.dist_before = dist_to_K_integral(P, kp, ctx.omega2);
  D.dist_after = D.dist_before;
  D.target = delta * om2;
  D.gauge_before = gauge(P, ctx.omega2, kp).value;
  D.gauge_after = D.gauge_before;

  prm.d_doubleprime = 0.5 * (0.5 * eps - std::abs(D.gauge_before - ctx.gamma_ref));
  if (!(prm.d_doubleprime > 0.0))
    throw Error(Errc::DegenerateMargin, "gauge drift already uses the eps/2 budget (d'' = " +
                                            std::to_string(prm.d_doubleprime) + ")");
  prm.l = l_lower_bound(*ctx.window);
  prm.kappa = kappa_for(*ctx.model, *ctx.window, prm.d_doubleprime / prm.l);
  prm.k = std::max({6, static_cast<int>(std::ceil(5.0 * delta * prm.l / (4.0 * prm.d_doubleprime))),
                    static_cast<int>(std::ceil(delta / prm.kappa))});
  const double r = delta / prm.k;
  {
    const PhaseWindow& w = *ctx.window;
    const double gap = w.s_plus_r1 - w.s_minus_r2;
    const bool ok = prm.k >= 6 && 5.0 * delta / (4.0 * prm.k) <= prm.d_doubleprime / prm.l * (1.0 + 1e-12) &&
                    r <= prm.kappa && 17.0 * (w.s_plus_r2 - w.s_minus_r1) / (prm.l * gap * gap) < 0.5;
    if (!ok) throw Error(Errc::InvalidArgument, "parameter inequalities for k, l, kappa do not hold");
  }

  prm.halo = cfg.halo;
  prm.rim_budget = r * om2;
  const CellMask G = choose_core(P, ctx.omega2, st.omega, kp, prm.rim_budget, cfg.halo, &prm.rim_dist, strict);

  double dmin = 1e300, utmax = 0.0;
  size_t gcount = 0;
  for (size_t c = 0; c < G.m.size(); ++c) {
    if (!G.m[c]) continue;
    ++gcount;
    const double db = kp.distance_to_boundary(P.s[c], P.g[c]);
    dmin = std::min(dmin, kp.inside_U(P.s[c], P.g[c]) ? db : -db);
    utmax = std::max(utmax, std::abs(P.ut[c]));
  }
  prm.d_prime = gcount ? dmin : 0.0;
  prm.m_prime = gcount ? ctx.m_star - utmax : 0.0;
  if (gcount && (prm.d_prime <= 0.0 || prm.m_prime <= 0.0))
    throw Error(Errc::DegenerateMargin, "core not strictly admissible (d' = " + std::to_string(prm.d_prime) +
                                            ", m' = " + std::to_string(prm.m_prime) + ")");
  prm.osc_bound = std::min({r / 4.0, prm.d_prime / 4.0, prm.kappa / 2.0});

  double u_dev0 = 0.0, ut_dev0 = 0.0;
  for (size_t k = 0; k < st.u.v.size(); ++k) u_dev0 = std::max(u_dev0, std::abs(st.u.v[k] - ctx.u_star.v[k]));
  for (size_t c = 0; c < P.ut.size(); ++c) ut_dev0 = std::max(ut_dev0, std::abs(P.ut[c] - ctx.ut_star[c]));

  Stepper S(st, ctx, P, r, strict);
  std::vector<Rect> packed = gcount ? pack_squares(G, cfg.min_square) : std::vector<Rect>{};
  std::vector<Rect> squares;
  if (strict) {
    std::function<void(const Rect&)> split = [&](const Rect& q) {
      if (S.oscillation_ok(q, prm.osc_bound, prm.m_prime / 4.0)) {
        squares.push_back(q);
        return;
      }
      if (q.width() / 2 < cfg.min_square)
        throw Error(Errc::OscillationUnresolvable,
                    "square at cell (" + std::to_string(q.i0) + ", " + std::to_string(q.n0) +
                        ") cannot meet the oscillation bound " + std::to_string(prm.osc_bound));
      for (const Rect& c : quarters(q)) split(c);
    };
    for (const Rect& q : packed) split(q);
  }
  size_t N = 0;
  if (strict) N = squares.size();
  else
    for (const Rect& q : packed) N += static_cast<size_t>(q.width() / cfg.min_square) * (q.width() / cfg.min_square);
  const double Nd = std::max<double>(1.0, static_cast<double>(N));
  const double nb = 1.0 + ctx.b_sup + ctx.d_sup;
  prm.caps[0] = std::min({eta, 0.5 * eps - u_dev0, 0.5 * eps - ut_dev0});
  prm.caps[1] = prm.m_prime / 4.0;
  prm.caps[2] = std::min(r / 4.0, prm.d_prime / 4.0) / nb;
  prm.caps[3] = prm.kappa / (2.0 * nb);
  prm.caps[4] = delta * om2 / (2.0 * Nd * prm.k * kp.diameter());
  prm.caps[5] = prm.d_doubleprime * om2 / (14.0 * Nd);
  const double eps_caps = *std::min_element(prm.caps, prm.caps + 6);
  const double eps_time = strict ? eps_caps : std::min({0.5 * eps - ut_dev0, prm.m_prime / 4.0, eta});
  if (N > 0 && !(eps_caps > 0.0 && eps_time > 0.0))
    throw Error(Errc::DegenerateMargin, "a per-square cap is not positive");

  auto make = [&](SquarePlan& plan, double amp) -> std::optional<OscillationProfile> {
    ProfileOptions o;
    o.eps_time = plan.eps_time = strict ? amp : eps_time;
    // psi_t moves the residual level, so it stays inside the membership margin
    if (!strict) o.eps_time_psi = prm.caps[2];
    plan.eps_i = amp;
    o.phase = phase_fraction(cfg.seed, step_index, plan.Q);
    o.lobe_step = plan.lobe_step;
    if (strict) return build_profile(plan.Q, plan.lambda1_used, plan.lambda2_used, amp, g, o);
    // resolved: raise the budget by doubling until the grid can carry the tooth, never past caps[0]
    std::string why;
    for (double e = amp;; e *= 2.0) {
      const double ei = std::min(e, prm.caps[0]);
      try {
        plan.eps_i = ei;
        return build_profile(plan.Q, plan.lambda1_used, plan.lambda2_used, ei, g, o);
      } catch (const Error& err) {
        why = err.qualified();
      }
      if (ei >= prm.caps[0]) break;
    }
    plan.skipped = why;
    return std::nullopt;
  };

  std::vector<Choice> chosen;
  if (strict) {
    for (const Rect& q : squares) {
      Choice ch;
      ch.plan = S.plan_for(q);
      if (!ch.plan.in_I1) {
        ch.profile = make(ch.plan, eps_caps);
        const Trial t = S.evaluate(*ch.profile);
        ch.plan.built = true;
        if (t.ok) ch.plan.dist_after = t.dist;
      }
      chosen.push_back(std::move(ch));
    }
  } else {
    std::function<double(const Rect&, std::vector<Choice>&)> best = [&](const Rect& q, std::vector<Choice>& out) {
      Choice leaf;
      leaf.plan = S.plan_for(q);
      if (!leaf.plan.in_I1 && leaf.plan.skipped.empty()) {
        S.robust_slopes(leaf.plan);
        if (leaf.plan.lambda1_used > 0.0 && leaf.plan.lambda2_used > 0.0) {
          // raw slopes, then slopes rounded so the teeth fill whole cells; keep the better trial
          const SquarePlan raw = leaf.plan;
          const CommensurateSlopes cs = commensurate_slopes(raw.lambda1_used, raw.lambda2_used);
          std::string why;
          for (int variant = 0; variant < 2; ++variant) {
            SquarePlan plan = raw;
            if (variant == 1) {
              plan.lambda1_used = cs.lambda1;
              plan.lambda2_used = cs.lambda2;
              plan.lobe_step = cs.rise + cs.fall;
            }
            const double floor = resolvable_budget(plan.lambda1_used, plan.lambda2_used, g.h(), q.width() * g.h());
            auto prof = make(plan, std::max(eps_caps, floor));
            if (!prof) {
              why = plan.skipped;
              continue;
            }
            const Trial t = S.evaluate(*prof);
            if (!t.ok || t.dist >= plan.dist_before) {
              why = t.ok ? "no gain" : t.reason;
              continue;
            }
            if (!leaf.profile || t.dist < leaf.plan.dist_after) {
              plan.built = true;
              plan.dist_after = t.dist;
              plan.skipped.clear();
              leaf.plan = plan;
              leaf.profile = std::move(prof);
            }
          }
          if (!leaf.profile) leaf.plan.skipped = why;
        } else {
          leaf.plan.skipped = "no room for a slope pair";
        }
      }
      const double leaf_cost = leaf.plan.dist_after;
      if (q.width() / 2 >= cfg.min_square) {
        std::vector<Choice> kids;
        double kc = 0.0;
        for (const Rect& c : quarters(q)) kc += best(c, kids);
        if (kc < leaf_cost * (1.0 - 1e-12)) {
          for (auto& k : kids) out.push_back(std::move(k));
          return kc;
        }
      }
      out.push_back(std::move(leaf));
      return leaf_cost;
    };
    for (const Rect& q : packed) best(q, chosen);
  }

  std::vector<OscillationProfile> profiles;
  for (auto& ch : chosen) {
    ++D.squares;
    if (ch.plan.in_I1) ++D.squares_I1;
    else ++D.squares_I2;
    if (ch.profile) {
      D.plateau_minus += ch.profile->plateau_minus_measure;
      D.plateau_plus += ch.profile->plateau_plus_measure;
      profiles.push_back(*ch.profile);
    }
    D.plans.push_back(ch.plan);
  }
  D.profiles = profiles.size();

  SubsolutionState out = st;
  superpose(out, profiles, G);
  if (built) *built = profiles;

  // a-posteriori checks
  const CellPairs Q = residual_pair(out.u, out.v, *ctx.spec, ctx.F);
  D.dist_after = dist_to_K_integral(Q, kp, ctx.omega2);
  D.gauge_after = gauge(Q, ctx.omega2, kp).value;
  D.drift = std::abs(D.gauge_after - ctx.gamma_ref);
  for (size_t c = 0; c < Q.s.size(); ++c) {
    if (ctx.omega2.m[c] && !membership_U(Q.s[c], Q.g[c], Q.ut[c], kp, ctx.m_star)) ++D.membership_failures;
    D.ut_dev = std::max(D.ut_dev, std::abs(Q.ut[c] - ctx.ut_star[c]));
  }
  for (size_t k = 0; k < out.u.v.size(); ++k) {
    D.u_dev = std::max(D.u_dev, std::abs(out.u.v[k] - ctx.u_star.v[k]));
    D.sup_change = std::max({D.sup_change, std::abs(out.u.v[k] - st.u.v[k]), std::abs(out.v.v[k] - st.v.v[k])});
  }
  bool fixed_ok = true;
  for (int n = 0; n < g.nt && fixed_ok; ++n)
    for (int i = 0; i < g.nx; ++i) {
      if (!ctx.fixed(i, n)) continue;
      for (int b = n; b <= n + 1; ++b)
        for (int a = i; a <= i + 1; ++a)
          if (out.u(a, b) != ctx.u_star(a, b)) fixed_ok = false;
    }

  std::vector<std::string> bad;
  if (!(D.dist_after <= D.target)) bad.push_back("dist " + std::to_string(D.dist_after) + " > " + std::to_string(D.target));
  if (D.membership_failures) bad.push_back(std::to_string(D.membership_failures) + " cells outside U");
  if (!(D.u_dev < 0.5 * eps)) bad.push_back("|u - u*| = " + std::to_string(D.u_dev));
  if (!(D.ut_dev < 0.5 * eps)) bad.push_back("|u_t - u*_t| = " + std::to_string(D.ut_dev));
  if (!(D.drift < 0.5 * eps)) bad.push_back("gauge drift " + std::to_string(D.drift));
  if (!(D.sup_change < eta) && !profiles.empty()) bad.push_back("sup change " + std::to_string(D.sup_change));
  if (!fixed_ok) bad.push_back("fixed region modified");
  if (!bad.empty()) {
    std::string msg;
    // missing only the dist target while minimum squares could not be resolved: the grid is too coarse
    if (bad.size() == 1 && !(D.dist_after <= D.target)) {
      size_t stuck = 0;
      for (const SquarePlan& pl : D.plans)
        if (!pl.built && pl.Q.width() <= cfg.min_square &&
            (pl.skipped.rfind("oscillate.Unresolvable", 0) == 0 || pl.skipped.rfind("oscillate.Budget", 0) == 0))
          ++stuck;
      if (stuck > 0)
        throw Error(Errc::RefinementNeeded, bad[0] + " with " + std::to_string(stuck) + " unresolved minimum squares");
    }
    for (size_t k = 0; k < bad.size(); ++k) msg += (k ? "; " : "") + bad[k];
    D.failure = std::string("densify.PostconditionFailure: ") + msg;
    D.success = false;
    return st;
  }
  D.success = true;
  return out;
}

BaseSubsolution refine_base(const BaseSubsolution& base, int factor, const ProblemSpec& spec, const FluxModel& model,
                            const PhaseWindow& window) {
  const Grid fine = refine_grid(base.grid(), factor);
  const ModifiedFlux sf = build_modified_flux(model, window);
  BaseSubsolution r = base;
  r.u_star = solve_modified(spec, sf, fine, {}, &r.stats);
  r.v_star = stream_function(r.u_star, spec, sf);
  r.part.label = refine_mask(base.part.label, factor);
  r.part.strip_cells = base.part.strip_cells * factor;
  double m = 0.0;
  for (double a : cell_dt(r.u_star)) m = std::max(m, std::abs(a));
  r.m_star = std::max(base.m_star, m + 1.0);
  return r;
}

IterationResult iterate(const BaseSubsolution& base, const ProblemSpec& spec, const FluxModel& model,
                        const PhaseWindow& window, const KPrime& kp, double epsilon, const DensifyConfig& cfg) {
  IterationResult res;
  res.base = base;
  res.ctx = make_context(base, spec, model, window, kp, epsilon);
  const double gamma_ref = res.ctx.gamma_ref;
  res.state = SubsolutionState{base.u_star, base.v_star, CellMask(base.grid())};
  IterationReport& rep = res.report;
  rep.omega2_measure = static_cast<double>(res.ctx.omega2.count()) * base.grid().cell_area();
  rep.baseline_dist = dist_of(res.state, res.ctx);
  rep.delta0 = cfg.delta0.value_or(cfg.delta0_factor * rep.baseline_dist / rep.omega2_measure);
  rep.dist_trajectory.push_back(rep.baseline_dist);
  rep.gauge_trajectory.push_back(gamma_ref);
  if (cfg.steps <= 0) {
    rep.stop_reason = "empty schedule";
    return res;
  }

  int flat = 0;
  int j = 0;
  // state before the last refinement; restored when the step on the finer grid fails
  std::optional<IterationResult> coarse;
  auto roll_back = [&] {
    if (!coarse) return;
    res.base = std::move(coarse->base);
    res.ctx = std::move(coarse->ctx);
    res.state = std::move(coarse->state);
    coarse.reset();
    rep.stop_reason += " (refined attempt discarded)";
  };
  while (j < cfg.steps) {
    const double delta = rep.delta0 * std::ldexp(1.0, -j);
    const double eta = cfg.eta0 * std::ldexp(1.0, -j);
    StepDiagnostics D;
    std::vector<OscillationProfile> built;
    try {
      SubsolutionState next = density_step(res.state, res.ctx, delta, eta, cfg, j, D, &built);
      rep.steps.push_back(D);
      if (!D.success) {
        rep.stop_reason = D.failure;
        roll_back();
        break;
      }
      coarse.reset();
      const double prev = rep.dist_trajectory.back();
      rep.dist_trajectory.push_back(D.dist_after);
      rep.gauge_trajectory.push_back(D.gauge_after);
      for (auto& p : built) {
        rep.profiles.push_back(std::move(p));
        rep.profile_step.push_back(j);
      }
      res.state = std::move(next);
      flat = (D.dist_after < prev) ? 0 : flat + 1;
      if (flat >= 2) {
        rep.stop_reason = "densify.IterationStalled: dist did not decrease over two successful steps";
        break;
      }
      ++j;
    } catch (const Error& e) {
      const bool refinable = e.code() == Errc::RefinementNeeded || is_refinement_error(e.code());
      if (refinable && rep.refinements < cfg.max_refinements) {
        ++rep.refinements;
        D.failure = e.code() == Errc::RefinementNeeded ? e.qualified()
                                                       : std::string("densify.RefinementNeeded: ") + e.qualified();
        rep.steps.push_back(D);
        if (!coarse) coarse = IterationResult{res.state, res.ctx, res.base, {}};
        // carry the accumulated perturbation over to the re-solved fine base
        const Grid& cg = res.base.grid();
        Field du = res.state.u, dv = res.state.v;
        for (size_t k = 0; k < du.v.size(); ++k) {
          du.v[k] -= res.base.u_star.v[k];
          dv.v[k] -= res.base.v_star.v[k];
        }
        res.base = refine_base(res.base, 2, spec, model, window);
        res.ctx = make_context(res.base, spec, model, window, kp, epsilon);
        res.ctx.gamma_ref = gamma_ref;
        Field fu = refine(cg, du, 2).second, fv = refine(cg, dv, 2).second;
        for (size_t k = 0; k < fu.v.size(); ++k) {
          fu.v[k] += res.base.u_star.v[k];
          fv.v[k] += res.base.v_star.v[k];
        }
        res.state.u = std::move(fu);
        res.state.v = std::move(fv);
        res.state.omega = refine_mask(res.state.omega, 2);
        continue;
      }
      D.failure = refinable && e.code() != Errc::RefinementNeeded
                      ? std::string("densify.RefinementNeeded: ") + e.qualified()
                      : e.qualified();
      rep.steps.push_back(D);
      rep.stop_reason = D.failure;
      roll_back();
      break;
    }
  }
  if (rep.stop_reason.empty()) rep.stop_reason = "schedule complete";
  return res;
}

}  // namespace fbci
