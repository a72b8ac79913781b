#include "parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace fbci {

namespace {

// Thomas algorithm; a sub, b diag, c super. Overwrites d with the solution.
void tridiag(std::vector<double>& a, std::vector<double>& b, std::vector<double>& c, std::vector<double>& d) {
  const size_t n = b.size();
  for (size_t i = 1; i < n; ++i) {
    const double w = a[i] / b[i - 1];
    b[i] -= w * c[i - 1];
    d[i] -= w * d[i - 1];
  }
  d[n - 1] /= b[n - 1];
  for (size_t i = n - 1; i-- > 0;) d[i] = (d[i] - c[i] * d[i + 1]) / b[i];
}

struct Coeffs {
  std::vector<double> b, c, f;
};

Coeffs coeffs_at(const ProblemSpec& spec, const Grid& g, double t) {
  Coeffs k;
  k.b.resize(g.nx + 1);
  k.c.resize(g.nx + 1);
  k.f.resize(g.nx + 1);
  const double d = spec.d(t);
  for (int i = 0; i <= g.nx; ++i) {
    const double x = g.x(i);
    double bv, bx;
    spec.b_expr.eval_dx(x, t, bv, bx);
    k.b[i] = bv;
    k.c[i] = bx + d;
    k.f[i] = spec.f(x, t);
  }
  return k;
}

// L(u) and its tridiagonal Jacobian
void apply_operator(const std::vector<double>& u, const ModifiedFlux& sf, const Coeffs& k, double h,
                    std::vector<double>& L, std::vector<double>* lo, std::vector<double>* di,
                    std::vector<double>* up) {
  const int nx = static_cast<int>(u.size()) - 1;
  std::vector<double> flux(nx), dflux(nx);
  for (int i = 0; i < nx; ++i) {
    const double gr = (u[i + 1] - u[i]) / h;
    flux[i] = sf.eval(gr);
    dflux[i] = sf.slope(gr);
  }
  const double edge = sf.eval(0.0);  // zero-gradient boundary flux
  const double h2 = h * h;
  for (int i = 0; i <= nx; ++i) {
    double D, dm = 0.0, dd = 0.0, dp = 0.0;
    if (i == 0) {
      D = 2.0 * (flux[0] - edge) / h;
      dp = 2.0 * dflux[0] / h2;
      dd = -dp;
    } else if (i == nx) {
      D = 2.0 * (edge - flux[nx - 1]) / h;
      dm = 2.0 * dflux[nx - 1] / h2;
      dd = -dm;
    } else {
      D = (flux[i] - flux[i - 1]) / h;
      dp = dflux[i] / h2;
      dm = dflux[i - 1] / h2;
      dd = -(dp + dm);
    }
    double conv = 0.0;
    if (i > 0 && i < nx) {
      conv = k.b[i] * (u[i + 1] - u[i - 1]) / (2.0 * h);
      dp += k.b[i] / (2.0 * h);
      dm -= k.b[i] / (2.0 * h);
    }
    L[i] = D + conv + k.c[i] * u[i] + k.f[i];
    dd += k.c[i];
    if (lo) {
      (*lo)[i] = dm;
      (*di)[i] = dd;
      (*up)[i] = dp;
    }
  }
}

double trapezoid(const std::vector<double>& u, double h) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < u.size(); ++i) acc += 0.5 * h * (u[i] + u[i + 1]);
  return acc;
}

}  // namespace

Field solve_modified(const ProblemSpec& spec, const ModifiedFlux& sf, const Grid& g, const SolverOptions& opts,
                     SolverStats* stats) {
  const int nx = g.nx;
  const double h = g.h(), dt = g.dt();
  Field u(g, "u_star");
  std::vector<double> cur(nx + 1), prev(nx + 1), next(nx + 1), base(nx + 1), L(nx + 1);
  std::vector<double> lo(nx + 1), di(nx + 1), up(nx + 1), rhs(nx + 1);
  for (int i = 0; i <= nx; ++i) cur[i] = spec.u0(g.x(i));
  for (int i = 0; i <= nx; ++i) u(i, 0) = cur[i];
  const double mass0 = trapezoid(cur, h);

  SolverStats st;
  // Newton on x - base - theta L(x) = 0 from the guess in x; false if it does not converge
  auto newton = [&](const std::vector<double>& b, std::vector<double>& x, double theta, double t1, int& used) {
    const Coeffs k = coeffs_at(spec, g, t1);
    used = 0;
    for (;;) {
      apply_operator(x, sf, k, h, L, &lo, &di, &up);
      double res = 0.0, umax = 1.0;
      for (int i = 0; i <= nx; ++i) {
        rhs[i] = -(x[i] - b[i] - theta * L[i]);
        res = std::max(res, std::abs(rhs[i]));
        umax = std::max(umax, std::abs(x[i]));
      }
      if (res <= opts.newton_tol * umax) return true;
      if (used >= opts.newton_max || !std::isfinite(res)) return false;
      for (int i = 0; i <= nx; ++i) {
        lo[i] = -theta * lo[i];
        up[i] = -theta * up[i];
        di[i] = 1.0 - theta * di[i];
      }
      tridiag(lo, di, up, rhs);
      for (int i = 0; i <= nx; ++i) x[i] += rhs[i];
      ++used;
    }
  };
  // backward Euler from (t0, y) over tau; halves the step when Newton stalls
  std::function<bool(std::vector<double>&, double, double, int)> euler = [&](std::vector<double>& y, double t0,
                                                                            double tau, int depth) {
    std::vector<double> x = y;
    int used = 0;
    if (newton(y, x, tau, t0 + tau, used)) {
      st.newton_total += used;
      st.newton_max_used = std::max(st.newton_max_used, used);
      y = std::move(x);
      return true;
    }
    if (depth >= opts.max_halvings) return false;
    ++st.substeps;
    return euler(y, t0, 0.5 * tau, depth + 1) && euler(y, t0 + 0.5 * tau, 0.5 * tau, depth + 1);
  };

  for (int n = 0; n < g.nt; ++n) {
    const double t1 = g.t(n + 1);
    bool ok;
    if (n == 0) {
      next = cur;
      int used = 0;
      ok = newton(cur, next, dt, t1, used);
      if (ok) {
        st.newton_total += used;
        st.newton_max_used = std::max(st.newton_max_used, used);
      }
    } else {
      for (int i = 0; i <= nx; ++i) {
        base[i] = (4.0 * cur[i] - prev[i]) / 3.0;
        next[i] = 2.0 * cur[i] - prev[i];
      }
      int used = 0;
      ok = newton(base, next, 2.0 * dt / 3.0, t1, used);
      if (ok) {
        st.newton_total += used;
        st.newton_max_used = std::max(st.newton_max_used, used);
      }
    }
    if (!ok) {
      next = cur;
      ++st.fallback_steps;
      if (!euler(next, g.t(n), dt, 0))
        throw Error(Errc::NonConvergence, "Newton did not reach " + std::to_string(opts.newton_tol) + " in " +
                                              std::to_string(opts.newton_max) + " iterations at step " +
                                              std::to_string(n + 1) + " even after halving");
    }
    for (int i = 0; i <= nx; ++i) {
      if (!std::isfinite(next[i]) || std::abs(next[i]) > 1e6)
        throw Error(Errc::StabilityBreach, "field norm exceeded 1e6 at step " + std::to_string(n + 1));
    }
    prev = cur;
    cur = next;
    for (int i = 0; i <= nx; ++i) u(i, n + 1) = cur[i];
    ++st.steps;
  }
  st.mass_drift = trapezoid(cur, h) - mass0;
  if (stats) *stats = st;
  return u;
}

Field stream_function(const Field& u, const ProblemSpec& spec, const ModifiedFlux& sf) {
  const Grid& g = u.grid;
  const double h = g.h(), dt = g.dt();
  const Field P = potential(u, spec);
  const Field F = accumulate_F(spec, g);
  Field G(g, "flux_total");
  for (int n = 0; n <= g.nt; ++n) {
    const double t = g.t(n);
    for (int i = 0; i <= g.nx; ++i) {
      // zero-gradient mirror at the ends
      const double ux = (i == 0 || i == g.nx) ? 0.0 : (u(i + 1, n) - u(i - 1, n)) / (2.0 * h);
      G(i, n) = sf.eval(ux) + spec.b(g.x(i), t) * u(i, n) + P(i, n) + F(i, n);
    }
  }
  Field v(g, "v_star");
  double acc = 0.0;
  v(0, 0) = 0.0;
  for (int i = 0; i < g.nx; ++i) {
    acc += 0.5 * h * (u(i, 0) + u(i + 1, 0));
    v(i + 1, 0) = acc;
  }
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i <= g.nx; ++i) v(i, n + 1) = v(i, n) + 0.5 * dt * (G(i, n) + G(i, n + 1));
  return v;
}

CellMask Partition::mask(Region r) const {
  CellMask m(label.nx, label.nt);
  for (size_t k = 0; k < m.m.size(); ++k) m.m[k] = label.m[k] == r ? 1 : 0;
  return m;
}

size_t Partition::count(Region r) const {
  return static_cast<size_t>(std::count(label.m.begin(), label.m.end(), static_cast<uint8_t>(r)));
}

Partition partition(const Field& u, const PhaseWindow& w, std::optional<double> tol) {
  const Grid& g = u.grid;
  Partition p;
  if (tol) {
    p.tol = *tol;
  } else {
    double m = 0.0;
    const double h2 = g.h() * g.h();
    for (int n = 0; n <= g.nt; ++n)
      for (int i = 1; i < g.nx; ++i) m = std::max(m, std::abs(u(i + 1, n) - 2.0 * u(i, n) + u(i - 1, n)) / h2);
    p.tol = 2.0 * g.h() * m;
  }
  const std::vector<double> ux = cell_dx(u);
  p.label = CellMask(g);
  const double a = w.s_minus_r1, b = w.s_plus_r2, tl = p.tol;
  for (size_t k = 0; k < ux.size(); ++k) {
    const double s = ux[k];
    uint8_t r;
    if (std::abs(s - a) <= tl) r = kOmega0Minus;
    else if (std::abs(s - b) <= tl) r = kOmega0Plus;
    else if (s < a) r = kOmega1;
    else if (s > b) r = kOmega3;
    else r = kOmega2;
    p.label.m[k] = r;
  }
  if (p.count(kOmega2) == 0)
    throw Error(Errc::EmptyTransitionRegion, "no cell has u_x strictly inside the window (band " +
                                                 std::to_string(p.tol) + ")");
  auto column_is_one = [&](int i) {
    for (int n = 0; n < g.nt; ++n)
      if (p.label(i, n) != kOmega1) return false;
    return true;
  };
  int left = 0, right = 0;
  while (left < g.nx && column_is_one(left)) ++left;
  while (right < g.nx && column_is_one(g.nx - 1 - right)) ++right;
  p.strip_cells = std::min(left, right);
  p.delta_star = p.strip_cells * g.h();
  return p;
}

double base_gauge(const Field& u, const PhaseWindow& w, const FluxModel& model, const ModifiedFlux& sf,
                  const Partition& part) {
  (void)w;
  const std::vector<double> ux = cell_dx(u);
  const double lo = model.sigma_s2(), hi = model.sigma_s1();
  double acc = 0.0;
  size_t cnt = 0;
  for (size_t k = 0; k < ux.size(); ++k) {
    if (part.label.m[k] != kOmega2) continue;
    const double r = std::clamp(sf.eval(ux[k]), lo, hi);
    const double sm = branch_inverse(model, r, Branch::Left), sp = branch_inverse(model, r, Branch::Right);
    acc += std::clamp((ux[k] - sm) / (sp - sm), 0.0, 1.0);
    ++cnt;
  }
  if (cnt == 0) throw Error(Errc::EmptyTransitionRegion, "gauge over an empty transition region");
  return acc / static_cast<double>(cnt);
}

BaseSubsolution build_base(const ProblemSpec& spec, const FluxModel& model, const PhaseWindow& w,
                           const ModifiedFlux& sf, const Grid& grid, const SolverOptions& opts,
                           std::optional<double> tol) {
  BaseSubsolution b;
  b.u_star = solve_modified(spec, sf, grid, opts, &b.stats);
  b.v_star = stream_function(b.u_star, spec, sf);
  b.part = partition(b.u_star, w, tol);
  b.delta_star = b.part.delta_star;
  double m = 0.0;
  for (double a : cell_dt(b.u_star)) m = std::max(m, std::abs(a));
  b.m_star = m + 1.0;
  b.gamma_base = base_gauge(b.u_star, w, model, sf, b.part);
  return b;
}

}  // namespace fbci
