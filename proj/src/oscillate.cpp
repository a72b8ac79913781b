#include "oscillate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace fbci {

namespace {

double smoothstep(double z) {
  z = std::clamp(z, 0.0, 1.0);
  return z * z * (3.0 - 2.0 * z);
}

struct Teeth {
  std::vector<double> slope;
  double H = 0.0;
  int a = 0, n = 0;
  double ru = 0.0, rd = 0.0;
  int lobe = 0, pair = 0, pairs = 0, pad = 0;
  bool flip = false;
};

// One pair: rising lobe [l2 x a, ru, -l1 x n, -rd] followed by its reversal.
bool make_teeth(double H, double l1, double l2, double h, int W, double phase, Teeth& out) {
  Teeth t;
  t.H = H;
  t.a = static_cast<int>(std::floor(H / (l2 * h) * (1.0 + 1e-12)));
  t.n = static_cast<int>(std::floor(H / (l1 * h) * (1.0 + 1e-12)));
  if (t.a + t.n < 1) return false;
  t.ru = H - t.a * l2 * h;
  t.rd = H - t.n * l1 * h;
  if (t.ru < 1e-12 * H) t.ru = 0.0;
  if (t.rd < 1e-12 * H) t.rd = 0.0;
  std::vector<double> lobe;
  for (int k = 0; k < t.a; ++k) lobe.push_back(l2);
  if (t.ru > 0.0) lobe.push_back(t.ru / h);
  for (int k = 0; k < t.n; ++k) lobe.push_back(-l1);
  if (t.rd > 0.0) lobe.push_back(-t.rd / h);
  t.lobe = static_cast<int>(lobe.size());
  if (t.lobe < 2) return false;
  t.pair = 2 * t.lobe;
  if (t.pair > W) return false;
  t.pairs = W / t.pair;
  phase = std::clamp(phase, 0.0, std::nextafter(1.0, 0.0));
  t.flip = phase >= 0.5;
  const double frac = 2.0 * phase - (t.flip ? 1.0 : 0.0);
  const int slack = W - t.pairs * t.pair;
  t.pad = std::min(slack, static_cast<int>(std::floor(frac * (slack + 1))));
  std::vector<double> pair;
  for (double s : lobe) pair.push_back(s);
  for (auto it = lobe.rbegin(); it != lobe.rend(); ++it) pair.push_back(*it);
  if (t.flip) std::reverse(pair.begin(), pair.end());
  t.slope.assign(W, 0.0);
  int c = t.pad;
  for (int p = 0; p < t.pairs; ++p)
    for (double s : pair) t.slope[c++] = s;
  out = std::move(t);
  return true;
}

}  // namespace

CommensurateSlopes commensurate_slopes(double l1, double l2, int max_cells) {
  CommensurateSlopes best;
  double score = -1.0;
  for (int L = 2; L <= max_cells; ++L)
    for (int a = 1; a < L; ++a) {
      const int n = L - a;
      const double H = std::min(n * l1, a * l2);  // in units of h
      const double q1 = H / n, q2 = H / a;
      const double sc = std::min(q1 / l1, q2 / l2);
      if (sc > score + 1e-12) {
        score = sc;
        best = {q1, q2, a, n};
      }
    }
  return best;
}

double min_lobe_height(double l1, double l2, double h) { return std::min(l1, l2) * h; }

double resolvable_budget(double l1, double l2, double h, double Lx) {
  const double harm = l1 * l2 / (l1 + l2);
  const double Hmin = min_lobe_height(l1, l2, h);
  const double P = std::ceil(Hmin / (h * harm) - 1e-9);
  return std::max(P * h * harm, Hmin) * (Lx + 1.0) * (1.0 + 1e-9);
}

OscillationProfile build_profile(const Rect& Q, double l1, double l2, double eps, const Grid& g,
                                 const ProfileOptions& opts) {
  if (Q.width() < 8 || Q.height() < 4)
    throw Error(Errc::InvalidArgument, "rectangle below the 8 x 4 cell resolvability floor");
  if (Q.i0 < 0 || Q.i1 > g.nx || Q.n0 < 0 || Q.n1 > g.nt) throw Error(Errc::InvalidArgument, "rectangle off grid");
  if (!(l1 > 0.0 && l2 > 0.0 && eps > 0.0)) throw Error(Errc::InvalidArgument, "slopes and budget must be positive");

  const double h = g.h(), dt = g.dt();
  const int W = Q.width(), R = Q.height();
  const double Lx = W * h, Lt = R * dt, area = Lx * Lt;
  const double et = opts.eps_time.value_or(eps);
  const double etp = opts.eps_time_psi.value_or(et);
  const double harm = l1 * l2 / (l1 + l2);
  const double Hmin = min_lobe_height(l1, l2, h);

  // lobe heights to try, largest first
  int Pmax = W / 2;
  int Pmin = static_cast<int>(std::ceil(Hmin / (h * harm) - 1e-9));
  const double cap = eps / (Lx + 1.0);
  bool amplitude_blocked = true;

  const int step = std::max(1, opts.lobe_step);
  for (int P = Pmax; P >= Pmin; --P) {
    if (P % step != 0) continue;
    double H = P * h * harm;
    if (H < Hmin) H = Hmin;
    const bool at_floor = (P == Pmin);
    if (H >= cap) continue;
    if (opts.max_height && H > *opts.max_height && !at_floor) continue;
    Teeth teeth;
    if (!make_teeth(H, l1, l2, h, W, opts.phase, teeth)) continue;
    amplitude_blocked = false;

    OscillationProfile p;
    p.Q = Q;
    p.lambda1 = l1;
    p.lambda2 = l2;
    p.epsilon = eps;
    p.eps_time = et;
    p.eps_time_psi = etp;
    p.nu = H;
    p.rise_cells = teeth.a;
    p.fall_cells = teeth.n;
    p.rise_rem = teeth.ru / h;
    p.fall_rem = teeth.rd / h;
    p.lobe_cells = teeth.lobe;
    p.pair_cells = teeth.pair;
    p.pairs = teeth.pairs;
    p.pad_left = teeth.pad;
    p.flipped = teeth.flip;

    p.f.assign(W + 1, 0.0);
    const int end = teeth.pad + teeth.pairs * teeth.pair;
    for (int j = 0; j < W; ++j) p.f[j + 1] = (j + 1 >= end) ? 0.0 : p.f[j] + teeth.slope[j] * h;
    // exact discrete zero mean: move the last trough node
    double I = 0.0;
    for (int j = 0; j < W; ++j) I += 0.5 * h * (p.f[j] + p.f[j + 1]);
    if (I != 0.0 && teeth.pairs > 0) {
      // last turning node of the final lobe
      const int back = teeth.flip ? teeth.n + (teeth.rd > 0.0 ? 1 : 0) : teeth.a + (teeth.ru > 0.0 ? 1 : 0);
      p.f[end - back] -= I / h;
    }
    p.slope.resize(W);
    for (int j = 0; j < W; ++j) p.slope[j] = (p.f[j + 1] - p.f[j]) / h;
    p.Psi.assign(W + 1, 0.0);
    for (int j = 0; j < W; ++j) p.Psi[j + 1] = p.Psi[j] + 0.5 * h * (p.f[j] + p.f[j + 1]);

    double fmax = 0.0, pmax = 0.0;
    for (double a : p.f) fmax = std::max(fmax, std::abs(a));
    for (double a : p.Psi) pmax = std::max(pmax, std::abs(a));

    // shortest admissible ramp
    int rows = -1;
    double dh = 0.0;
    for (int tr = std::max(1, opts.min_ramp_rows); 2 * tr < R; ++tr) {
      dh = 0.0;
      for (int q = 0; q < tr; ++q) dh = std::max(dh, smoothstep((q + 1.0) / tr) - smoothstep(static_cast<double>(q) / tr));
      const double tau = tr * dt;
      if (fmax * dh / dt < et && pmax * dh / dt < etp && 2.0 * tau * Lx < 0.5 * eps) {
        rows = tr;
        break;
      }
    }
    if (rows < 0) continue;

    p.ramp_rows = rows;
    p.tau = rows * dt;
    p.hcut.assign(R + 1, 1.0);
    for (int q = 0; q <= R; ++q) {
      if (q < rows) p.hcut[q] = smoothstep(static_cast<double>(q) / rows);
      if (R - q < rows) p.hcut[q] = std::min(p.hcut[q], smoothstep(static_cast<double>(R - q) / rows));
    }
    p.max_phi = fmax;
    p.max_psi = pmax;
    p.max_phi_t = fmax * dh / dt;
    p.max_psi_t = pmax * dh / dt;

    size_t full_rows = 0;
    for (int q = 0; q < R; ++q)
      if (p.hcut[q] == 1.0 && p.hcut[q + 1] == 1.0) ++full_rows;
    size_t cm = 0, cp = 0;
    for (int j = 0; j < W; ++j) {
      if (std::abs(p.slope[j] + l1) <= 1e-9 * l1) ++cm;
      else if (std::abs(p.slope[j] - l2) <= 1e-9 * l2) ++cp;
    }
    p.plateau_minus_measure = static_cast<double>(cm * full_rows) * h * dt;
    p.plateau_plus_measure = static_cast<double>(cp * full_rows) * h * dt;
    p.plateau_minus_target = l2 / (l1 + l2) * area;
    p.plateau_plus_target = l1 / (l1 + l2) * area;
    if (std::abs(p.plateau_minus_measure - p.plateau_minus_target) >= eps ||
        std::abs(p.plateau_plus_measure - p.plateau_plus_target) >= eps)
      continue;
    if (!(p.max_phi < eps && p.max_psi < eps)) continue;
    return p;
  }
  if (amplitude_blocked)
    throw Error(Errc::UnresolvableSawtooth, "budget " + std::to_string(eps) + " needs a lobe below the grid floor " +
                                                std::to_string(Hmin));
  throw Error(Errc::BudgetInfeasible, "no ramp and lobe fit the budget " + std::to_string(eps) + " in " +
                                          std::to_string(W) + " x " + std::to_string(R) + " cells");
}

ProfileCheck check_profile(const OscillationProfile& p, const Grid& g) {
  ProfileCheck c;
  const double h = g.h(), dt = g.dt();
  const Rect& Q = p.Q;
  double mphi = 0.0, mpsi = 0.0, mphit = 0.0, mpsit = 0.0;
  bool slopes_ok = true;
  for (int n = Q.n0; n <= Q.n1; ++n) {
    for (int i = Q.i0; i <= Q.i1; ++i) {
      mphi = std::max(mphi, std::abs(p.phi(i, n)));
      mpsi = std::max(mpsi, std::abs(p.psi(i, n)));
      if (n < Q.n1) {
        mphit = std::max(mphit, std::abs(p.phi(i, n + 1) - p.phi(i, n)) / dt);
        mpsit = std::max(mpsit, std::abs(p.psi(i, n + 1) - p.psi(i, n)) / dt);
      }
    }
  }
  for (int n = Q.n0; n < Q.n1; ++n)
    for (int i = Q.i0; i < Q.i1; ++i) {
      const double sx = 0.5 * ((p.phi(i + 1, n) - p.phi(i, n)) + (p.phi(i + 1, n + 1) - p.phi(i, n + 1))) / h;
      if (sx < -p.lambda1 * (1.0 + 1e-9) || sx > p.lambda2 * (1.0 + 1e-9)) slopes_ok = false;
    }
  c.a_bounds = mphi < p.epsilon && mpsi < p.epsilon && mphit < p.eps_time && mpsit < p.eps_time_psi;
  c.b_slopes = slopes_ok;
  c.minus_defect = std::abs(p.plateau_minus_measure - p.plateau_minus_target);
  c.plus_defect = std::abs(p.plateau_plus_measure - p.plateau_plus_target);
  c.c_plateaus = c.minus_defect < p.epsilon && c.plus_defect < p.epsilon;

  double row_int = 0.0, stream = 0.0;
  for (int n = Q.n0; n <= Q.n1; ++n) {
    double I = 0.0;
    for (int i = Q.i0; i < Q.i1; ++i) {
      I += 0.5 * h * (p.phi(i, n) + p.phi(i + 1, n));
      const double lhs = (p.psi(i + 1, n) - p.psi(i, n)) / h;
      stream = std::max(stream, std::abs(lhs - 0.5 * (p.phi(i, n) + p.phi(i + 1, n))));
    }
    row_int = std::max(row_int, std::abs(I));
  }
  c.max_row_integral = row_int;
  c.max_stream_defect = stream;
  c.d_stream = stream <= 1e-12;
  c.e_zero_mean = row_int <= 1e-12;

  bool bz = true;
  for (int i = Q.i0; i <= Q.i1; ++i)
    bz = bz && p.phi(i, Q.n0) == 0.0 && p.phi(i, Q.n1) == 0.0 && p.psi(i, Q.n0) == 0.0 && p.psi(i, Q.n1) == 0.0;
  for (int n = Q.n0; n <= Q.n1; ++n)
    bz = bz && p.phi(Q.i0, n) == 0.0 && p.phi(Q.i1, n) == 0.0 && p.psi(Q.i0, n) == 0.0 &&
         std::abs(p.psi(Q.i1, n)) <= 1e-12;
  c.boundary_zero = bz;
  return c;
}

void superpose(SubsolutionState& st, const std::vector<OscillationProfile>& ps, const CellMask& allowed) {
  for (size_t a = 0; a < ps.size(); ++a)
    for (size_t b = a + 1; b < ps.size(); ++b)
      if (ps[a].Q.overlaps(ps[b].Q))
        throw Error(Errc::OverlapViolation, "profiles " + std::to_string(a) + " and " + std::to_string(b) + " overlap");
  for (size_t a = 0; a < ps.size(); ++a) {
    const Rect& Q = ps[a].Q;
    for (int n = Q.n0; n < Q.n1; ++n)
      for (int i = Q.i0; i < Q.i1; ++i)
        if (!allowed(i, n))
          throw Error(Errc::SupportEscape, "profile " + std::to_string(a) + " leaves the admissible region");
  }
  for (const auto& p : ps) {
    const Rect& Q = p.Q;
    for (int n = Q.n0; n <= Q.n1; ++n)
      for (int i = Q.i0; i <= Q.i1; ++i) {
        st.u(i, n) += p.phi(i, n);
        st.v(i, n) += p.psi(i, n);
      }
    for (int n = Q.n0; n < Q.n1; ++n)
      for (int i = Q.i0; i < Q.i1; ++i) st.omega(i, n) = 1;
  }
}

}  // namespace fbci
