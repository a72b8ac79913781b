#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "inclusion.hpp"

namespace fbci {

namespace {

struct CellTerms {
  std::vector<double> A;  // u
  std::vector<double> S;  // sigma(u_x)
  std::vector<double> R;  // b u_x + c u + f
};

WeakResidual weak_core(const Field& u, const ProblemSpec& spec, const std::function<double(double)>& sigma,
                       size_t projected, const WeakResidualOptions& opts) {
  const Grid& g = u.grid;
  const double h = g.h(), dt = g.dt();
  const std::vector<double> ux = cell_dx(u), um = cell_mean(u);
  CellTerms c;
  c.A = um;
  c.S.resize(ux.size());
  c.R.resize(ux.size());
  for (int n = 0; n < g.nt; ++n) {
    const double t = (n + 0.5) * dt;
    for (int i = 0; i < g.nx; ++i) {
      const double x = (i + 0.5) * h;
      const size_t k = g.cell(i, n);
      c.S[k] = sigma(ux[k]);
      c.R[k] = spec.b(x, t) * ux[k] + spec.c(x, t) * um[k] + spec.f(x, t);
    }
  }

  // sample rows
  std::vector<int> rows;
  for (int j = 1; j <= opts.time_samples; ++j) {
    const int n = static_cast<int>(std::lround(static_cast<double>(g.nt) * j / opts.time_samples));
    if (n > 0 && (rows.empty() || n != rows.back())) rows.push_back(n);
  }

  WeakResidual out;
  out.projected_cells = projected;
  const double pi = std::numbers::pi;
  std::vector<double> cx(g.nx), sx(g.nx), cxn(g.nx + 1);
  for (int p = 0; p <= opts.max_p; ++p) {
    for (int i = 0; i < g.nx; ++i) {
      cx[i] = std::cos(p * pi * (i + 0.5) * h);
      sx[i] = std::sin(p * pi * (i + 0.5) * h);
    }
    for (int i = 0; i <= g.nx; ++i) cxn[i] = std::cos(p * pi * g.x(i));
    for (int q = 0; q <= opts.max_q; ++q) {
      const double norm = std::pow(g.T, q) * (1.0 + p * pi) + (q > 0 ? q * std::pow(g.T, q - 1) : 0.0);
      double lhs = 0.0;
      size_t r = 0;
      for (int n = 0; n < g.nt && r < rows.size(); ++n) {
        const double t = (n + 0.5) * dt;
        const double tq = std::pow(t, q), dtq = q > 0 ? q * std::pow(t, q - 1) : 0.0;
        double row = 0.0;
        for (int i = 0; i < g.nx; ++i) {
          const size_t k = g.cell(i, n);
          row += c.A[k] * cx[i] * dtq + c.S[k] * p * pi * sx[i] * tq + c.R[k] * cx[i] * tq;
        }
        lhs += row * h * dt;
        if (n + 1 != rows[r]) continue;
        const double s = g.t(n + 1), sq = std::pow(s, q);
        double rhs = 0.0;
        for (int i = 0; i <= g.nx; ++i) {
          const double w = (i == 0 || i == g.nx) ? 0.5 * h : h;
          rhs += w * (u(i, n + 1) * cxn[i] * sq - spec.u0(g.x(i)) * cxn[i] * (q == 0 ? 1.0 : 0.0));
        }
        const double diff = std::abs(lhs - rhs);
        if (p == 0 && q == 0) out.mass_defect = std::max(out.mass_defect, diff);
        const double res = diff / norm;
        ++out.evaluations;
        if (res > out.max_residual) {
          out.max_residual = res;
          out.worst_p = p;
          out.worst_q = q;
          out.worst_s = s;
        }
        ++r;
      }
    }
  }
  return out;
}

}  // namespace

WeakResidual weak_residual(const Field& u, const ProblemSpec& spec, const FluxModel& model,
                           const WeakResidualOptions& opts) {
  size_t projected = 0;
  for (double s : cell_dx(u))
    if (s > model.s1 && s < model.s2) ++projected;
  auto sigma = [&model](double s) {
    if (s <= model.s1) return model.eval(s);
    if (s >= model.s2) return model.eval_right(s);
    return (s - model.s1 <= model.s2 - s) ? model.eval(model.s1) : model.eval_right(model.s2);
  };
  return weak_core(u, spec, sigma, projected, opts);
}

WeakResidual weak_residual(const Field& u, const ProblemSpec& spec, const ModifiedFlux& sigma_tilde,
                           const WeakResidualOptions& opts) {
  return weak_core(u, spec, [&sigma_tilde](double s) { return sigma_tilde.eval(s); }, 0, opts);
}

TheoremLedger theorem_checks(const Field& u, const BaseSubsolution& base, const KPrime& kp, double epsilon,
                             double gamma_ref, double band_limit) {
  const Grid& g = u.grid;
  const PhaseWindow& w = kp.window();
  const FluxModel& m = kp.model();
  const CellMask& lab = base.part.label;
  const double tol = base.part.tol;
  TheoremLedger L;
  L.cell_measure = g.cell_area();

  const std::vector<double> ux = cell_dx(u), ut = cell_dt(u), uxs = cell_dx(base.u_star), uts = cell_dt(base.u_star);
  for (size_t k = 0; k < u.v.size(); ++k) L.u_dev = std::max(L.u_dev, std::abs(u.v[k] - base.u_star.v[k]));
  for (size_t k = 0; k < ut.size(); ++k) L.ut_dev = std::max(L.ut_dev, std::abs(ut[k] - uts[k]));

  size_t left = 0, right = 0;
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) {
      const size_t k = g.cell(i, n);
      const double s = ux[k];
      if (s > w.s_minus_r1 && s < m.s1) ++left;
      if (s > m.s2 && s < w.s_plus_r2) ++right;
      switch (lab(i, n)) {
        case kOmega1:
        case kOmega3: {
          bool same = true;
          for (int b = n; b <= n + 1; ++b)
            for (int a = i; a <= i + 1; ++a)
              if (u(a, b) != base.u_star(a, b)) same = false;
          if (!same) ++L.fixed_mismatch;
          if (lab(i, n) == kOmega1 && !(s < w.s_minus_r1)) ++L.omega1_violations;
          if (lab(i, n) == kOmega3 && !(s > w.s_plus_r2)) ++L.omega3_violations;
          break;
        }
        case kOmega0Minus:
          ++L.zero_minus_cells;
          L.c_minus_dev = std::max(L.c_minus_dev, std::abs(s - w.s_minus_r1));
          break;
        case kOmega0Plus:
          ++L.zero_plus_cells;
          L.c_plus_dev = std::max(L.c_plus_dev, std::abs(s - w.s_plus_r2));
          break;
        default:
          break;
      }
    }
  L.left_phase_measure = static_cast<double>(left) * L.cell_measure;
  L.right_phase_measure = static_cast<double>(right) * L.cell_measure;
  L.two_phase = left > 0 && right > 0;

  const CellMask omega2 = base.part.mask(kOmega2);
  const GaugeReport gr = solution_gauge(ux, g, omega2, kp);
  L.omega2_cells = omega2.count();
  L.omega2_band = gr.band_cells;
  L.omega2_measure = static_cast<double>(L.omega2_cells) * L.cell_measure;
  L.band_fraction = L.omega2_cells ? static_cast<double>(gr.band_cells) / static_cast<double>(L.omega2_cells) : 0.0;
  L.F_plus = gr.F_plus;
  L.F_minus = gr.F_minus;
  L.gamma_u = gr.value;
  L.gamma_ref = gamma_ref;

  L.a_fixed = L.fixed_mismatch == 0;
  L.a_sup = L.u_dev < epsilon;
  L.a_time = L.ut_dev < epsilon;
  L.b_omega1 = L.omega1_violations == 0;
  L.b_omega3 = L.omega3_violations == 0;
  L.b_omega2 = L.omega2_cells > 0 && L.band_fraction <= band_limit;
  L.c_minus = L.zero_minus_cells == 0 || L.c_minus_dev <= tol;
  L.c_plus = L.zero_plus_cells == 0 || L.c_plus_dev <= tol;
  const bool have_gamma = L.gamma_u >= 0.0;
  L.d_plus = have_gamma && std::abs(L.F_plus - L.gamma_u * L.omega2_measure) <= L.cell_measure * (1.0 + 1e-9);
  L.d_minus =
      have_gamma && std::abs(L.F_minus - (1.0 - L.gamma_u) * L.omega2_measure) <= L.cell_measure * (1.0 + 1e-9);
  L.d_gamma = have_gamma && std::abs(L.gamma_u - gamma_ref) < epsilon;
  L.d_counts = gr.F_plus_cells + gr.F_minus_cells + gr.band_cells == L.omega2_cells;
  return L;
}

BoundaryLedger boundary_checks(const Field& u, const BaseSubsolution& base, const ProblemSpec& spec) {
  const Grid& g = u.grid;
  BoundaryLedger B;
  for (int i = 0; i <= g.nx; ++i) B.initial_dev = std::max(B.initial_dev, std::abs(u(i, 0) - spec.u0(g.x(i))));
  B.initial_exact = B.initial_dev == 0.0;

  const int sc = base.part.strip_cells;
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i <= g.nx; ++i)
      if ((i <= sc || i >= g.nx - sc) && u(i, n) != base.u_star(i, n)) ++B.strip_mismatch;
  B.strips_exact = B.strip_mismatch == 0;

  // second-order one-sided u_x at x = 0, 1 against its truncation bound h^2/3 |u_xxx|
  const double h = g.h();
  double d3 = 0.0, scale = 0.0;
  for (int n = 0; n <= g.nt; ++n) {
    const double l = (-3.0 * u(0, n) + 4.0 * u(1, n) - u(2, n)) / (2.0 * h);
    const double r = (3.0 * u(g.nx, n) - 4.0 * u(g.nx - 1, n) + u(g.nx - 2, n)) / (2.0 * h);
    B.neumann_dev = std::max({B.neumann_dev, std::abs(l), std::abs(r)});
    for (int j = 0; j + 3 <= 4 && j + 3 <= g.nx; ++j) {
      d3 = std::max(d3, std::abs(u(j + 3, n) - 3.0 * u(j + 2, n) + 3.0 * u(j + 1, n) - u(j, n)));
      const int e = g.nx - j;
      d3 = std::max(d3, std::abs(u(e, n) - 3.0 * u(e - 1, n) + 3.0 * u(e - 2, n) - u(e - 3, n)));
    }
    scale = std::max({scale, std::abs(u(0, n)), std::abs(u(g.nx, n))});
  }
  // d3 / h^3 approximates |u_xxx|; doubled for the one-sided sampling
  B.neumann_tol = 2.0 * d3 / (3.0 * h) + 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale) / h;
  B.neumann = B.neumann_dev <= B.neumann_tol;
  return B;
}

std::vector<CheckLine> ledger_lines(const TheoremLedger& th, const BoundaryLedger& bd) {
  auto num = [](double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::vector<CheckLine> out;
  out.push_back({"a.fixed_region", th.a_fixed, std::to_string(th.fixed_mismatch) + " cells differ"});
  out.push_back({"a.sup_u", th.a_sup, "|u - u*| = " + num(th.u_dev)});
  out.push_back({"a.sup_ut", th.a_time, "|u_t - u*_t| = " + num(th.ut_dev)});
  out.push_back({"b.omega1", th.b_omega1, std::to_string(th.omega1_violations) + " violations"});
  out.push_back({"b.omega2_phases", th.b_omega2, "band fraction " + num(th.band_fraction)});
  out.push_back({"b.omega3", th.b_omega3, std::to_string(th.omega3_violations) + " violations"});
  out.push_back({"c.zero_minus", th.c_minus, "max dev " + num(th.c_minus_dev)});
  out.push_back({"c.zero_plus", th.c_plus, "max dev " + num(th.c_plus_dev)});
  out.push_back({"d.F_plus", th.d_plus, "|F+| = " + num(th.F_plus) + ", gamma |E| = " + num(th.gamma_u * th.omega2_measure)});
  out.push_back({"d.F_minus", th.d_minus,
                 "|F-| = " + num(th.F_minus) + ", (1 - gamma) |E| = " + num((1.0 - th.gamma_u) * th.omega2_measure)});
  out.push_back({"d.gamma", th.d_gamma, "gamma = " + num(th.gamma_u) + ", reference " + num(th.gamma_ref)});
  out.push_back({"d.counts", th.d_counts, "F+ + F- + band = Omega2 cells"});
  out.push_back({"two_phase", th.two_phase,
                 "left " + num(th.left_phase_measure) + ", right " + num(th.right_phase_measure)});
  out.push_back({"initial_datum", bd.initial_exact, "max dev " + num(bd.initial_dev)});
  out.push_back({"lateral_strips", bd.strips_exact, std::to_string(bd.strip_mismatch) + " nodes differ"});
  out.push_back({"neumann", bd.neumann, "one-sided u_x " + num(bd.neumann_dev) + " <= " + num(bd.neumann_tol)});
  return out;
}

}  // namespace fbci
