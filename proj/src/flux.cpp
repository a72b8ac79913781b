#include "flux.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace fbci {

namespace {

double poly(const std::array<double, 4>& c, double s) { return c[0] + s * (c[1] + s * (c[2] + s * c[3])); }
double dpoly(const std::array<double, 4>& c, double s) { return c[1] + s * (2.0 * c[2] + s * 3.0 * c[3]); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double point_segment(double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b,
                     double& sx) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double u = 0.0;
  if (len2 > 0.0) u = std::clamp(((px - a[0]) * dx + (py - a[1]) * dy) / len2, 0.0, 1.0);
  const double qx = a[0] + u * dx, qy = a[1] + u * dy;
  sx = qx;
  return std::hypot(px - qx, py - qy);
}

// polyline through the graph of one branch with chord error below 1e-9
std::vector<std::array<double, 2>> sample_arc(const FluxModel& m, double a, double b, Branch side) {
  std::vector<double> knots{a};
  for (double bp : m.breakpoints(a, b)) knots.push_back(bp);
  knots.push_back(b);
  std::vector<std::array<double, 2>> pts;
  for (size_t k = 0; k + 1 < knots.size(); ++k) {
    const double p = knots[k], q = knots[k + 1];
    const double m2 = m.curvature_bound(p, q, side);
    int n = 1;
    if (m2 > 0.0) n = static_cast<int>(std::ceil((q - p) * std::sqrt(m2 / 8e-9)));
    n = std::max(n, 1);
    for (int j = 0; j < n; ++j) {
      const double s = p + (q - p) * j / n;
      pts.push_back({s, m.eval_branch(s, side)});
    }
  }
  pts.push_back({b, m.eval_branch(b, side)});
  return pts;
}

struct ArcHit {
  double dist;
  double s;
};

ArcHit project_arc(const std::vector<std::array<double, 2>>& arc, double s, double g) {
  // chunked scan with bounding boxes; exact minimum over all polyline pieces
  constexpr size_t chunk = 64;
  ArcHit best{std::numeric_limits<double>::infinity(), arc.front()[0]};
  for (size_t c0 = 0; c0 + 1 < arc.size(); c0 += chunk) {
    const size_t c1 = std::min(arc.size() - 1, c0 + chunk);
    if (c1 - c0 > 4) {
      double xlo = arc[c0][0], xhi = arc[c0][0], ylo = arc[c0][1], yhi = arc[c0][1];
      for (size_t j = c0; j <= c1; ++j) {
        xlo = std::min(xlo, arc[j][0]);
        xhi = std::max(xhi, arc[j][0]);
        ylo = std::min(ylo, arc[j][1]);
        yhi = std::max(yhi, arc[j][1]);
      }
      const double dx = std::max({xlo - s, 0.0, s - xhi});
      const double dy = std::max({ylo - g, 0.0, g - yhi});
      if (std::hypot(dx, dy) >= best.dist) continue;
    }
    for (size_t j = c0; j < c1; ++j) {
      double sx;
      const double d = point_segment(s, g, arc[j], arc[j + 1], sx);
      if (d < best.dist) best = {d, sx};
    }
  }
  return best;
}

}  // namespace

size_t FluxModel::index_left(double s) const {
  for (size_t k = 0; k < segments.size(); ++k)
    if (s <= segments[k].upto) return k;
  return segments.size() - 1;
}

size_t FluxModel::index_right(double s) const {
  for (size_t k = 0; k < segments.size(); ++k)
    if (s < segments[k].upto) return k;
  return segments.size() - 1;
}

double FluxModel::eval(double s) const { return poly(segments[index_left(s)].c, s); }
double FluxModel::eval_right(double s) const { return poly(segments[index_right(s)].c, s); }
double FluxModel::slope_left(double s) const { return dpoly(segments[index_left(s)].c, s); }
double FluxModel::slope_right(double s) const { return dpoly(segments[index_right(s)].c, s); }

double FluxModel::curvature_bound(double a, double b, Branch side) const {
  const size_t k0 = side == Branch::Left ? index_left(a) : index_right(a);
  const size_t k1 = side == Branch::Left ? index_left(b) : index_right(b);
  double m = 0.0;
  for (size_t k = std::min(k0, k1); k <= std::max(k0, k1); ++k) {
    const auto& c = segments[k].c;
    m = std::max({m, std::abs(2.0 * c[2] + 6.0 * c[3] * a), std::abs(2.0 * c[2] + 6.0 * c[3] * b)});
  }
  return m;
}

std::vector<double> FluxModel::breakpoints(double a, double b) const {
  std::vector<double> out;
  for (const auto& seg : segments)
    if (std::isfinite(seg.upto) && seg.upto > a && seg.upto < b) out.push_back(seg.upto);
  return out;
}

FluxModel validate_flux(const FluxDescription& cand) {
  if (cand.segments.empty()) throw Error(Errc::ConfigError, "flux has no segments");
  for (size_t k = 1; k < cand.segments.size(); ++k)
    if (!(cand.segments[k].upto > cand.segments[k - 1].upto))
      throw Error(Errc::ConfigError, "flux segment breakpoints must increase");
  if (std::isfinite(cand.segments.back().upto))
    throw Error(Errc::ConfigError, "last flux segment must extend to +infinity");
  if (!(cand.work_hi > cand.work_lo)) throw Error(Errc::ConfigError, "empty working interval");

  FluxModel m;
  m.segments = cand.segments;
  m.s1 = cand.s1;
  m.s2 = cand.s2;
  m.work_lo = cand.work_lo;
  m.work_hi = cand.work_hi;

  if (!(m.s1 > 0.0 && m.s2 > m.s1))
    throw Error(Errc::SignViolation, "need s2 > s1 > 0, got s1=" + num(m.s1) + " s2=" + num(m.s2));
  if (std::abs(m.eval(0.0)) > 1e-12) throw Error(Errc::SignViolation, "sigma(0) = " + num(m.eval(0.0)) + " != 0");
  const double a1 = m.sigma_s1(), a2 = m.sigma_s2();
  if (!(a1 > a2 && a2 >= 0.0))
    throw Error(Errc::SignViolation,
                "need sigma(s1) > sigma(s2) >= 0, got " + num(a1) + " and " + num(a2));

  // unbounded outer pieces must be increasing affine maps
  const auto& first = m.segments.front().c;
  const auto& last = m.segments.back().c;
  if (first[2] != 0.0 || first[3] != 0.0 || last[2] != 0.0 || last[3] != 0.0)
    throw Error(Errc::SlopeBoundViolation, "unbounded flux pieces must be affine");
  if (!(first[1] > 0.0) || !(last[1] > 0.0))
    throw Error(Errc::MonotonicityViolation, "unbounded flux pieces must be increasing");

  constexpr int kSamples = 4000;
  auto check_branch = [&](double a, double b, Branch side, const char* name) {
    if (!(b > a)) return;
    double prev = m.eval_branch(a, side);
    for (int j = 1; j <= kSamples; ++j) {
      const double s = a + (b - a) * j / kSamples;
      const double cur = m.eval_branch(s, side);
      if (!(cur > prev))
        throw Error(Errc::MonotonicityViolation,
                    std::string("sigma not increasing on the ") + name + " branch near s=" + num(s));
      prev = cur;
    }
  };
  check_branch(std::min(m.work_lo, m.s1 - 1.0), m.s1, Branch::Left, "left");
  check_branch(m.s2, std::max(m.work_hi, m.s2 + 1.0), Branch::Right, "right");

  // far-field slope bounds on (-inf, s1/2) and (2 s2, inf)
  double lo = std::min(first[1], last[1]);
  double hi = std::max(first[1], last[1]);
  auto sweep = [&](double a, double b, Branch side) {
    if (!(b > a)) return;
    const double ds = (b - a) / kSamples;
    for (int j = 0; j < kSamples; ++j) {
      const double s = a + ds * j;
      const double sl = (m.eval_branch(s + ds, side) - m.eval_branch(s, side)) / ds;
      lo = std::min(lo, sl);
      hi = std::max(hi, sl);
    }
  };
  sweep(m.work_lo, 0.5 * m.s1, Branch::Left);
  sweep(2.0 * m.s2, m.work_hi, Branch::Right);
  if (!(lo > 0.0)) throw Error(Errc::SlopeBoundViolation, "far-field slope not bounded below by a positive number");
  if (cand.lambda_lo && !(*cand.lambda_lo > 0.0 && *cand.lambda_lo <= lo * (1.0 + 1e-12)))
    throw Error(Errc::SlopeBoundViolation,
                "declared lambda " + num(*cand.lambda_lo) + " exceeds sampled slope " + num(lo));
  if (cand.lambda_hi && !(*cand.lambda_hi >= hi * (1.0 - 1e-12)))
    throw Error(Errc::SlopeBoundViolation,
                "declared Lambda " + num(*cand.lambda_hi) + " below sampled slope " + num(hi));
  m.lambda_lo = cand.lambda_lo.value_or(lo);
  m.lambda_hi = cand.lambda_hi.value_or(hi);

  // conjugate abscissae
  auto left = [&](double s) { return m.eval(s); };
  auto right = [&](double s) { return m.eval_right(s); };
  m.s1_star = bisect_increasing(left, 0.0, m.s1, a2);
  double top = std::max(m.work_hi, m.s2 + 1.0);
  for (int j = 0; j < 60 && m.eval_right(top) < a1; ++j) top = m.s2 + 2.0 * (top - m.s2);
  m.s2_star = bisect_increasing(right, m.s2, top, a1);
  if (std::abs(m.eval(m.s1_star) - a2) > 1e-10 || std::abs(m.eval_right(m.s2_star) - a1) > 1e-10)
    throw Error(Errc::MonotonicityViolation, "conjugate abscissae not resolved to 1e-10");
  if (!(m.s1_star >= 0.0 && m.s1_star < m.s1 && m.s2_star > m.s2))
    throw Error(Errc::MonotonicityViolation, "conjugate abscissae out of order");
  return m;
}

double branch_inverse(const FluxModel& m, double r, Branch branch) {
  const double lo = m.sigma_s2(), hi = m.sigma_s1();
  if (!(r >= lo && r <= hi))
    throw Error(Errc::OutOfRange, "level " + num(r) + " outside [" + num(lo) + ", " + num(hi) + "]");
  if (branch == Branch::Left) {
    if (r == lo) return m.s1_star;
    if (r == hi) return m.s1;
    return bisect_increasing([&](double s) { return m.eval(s); }, m.s1_star, m.s1, r);
  }
  if (r == lo) return m.s2;
  if (r == hi) return m.s2_star;
  return bisect_increasing([&](double s) { return m.eval_right(s); }, m.s2, m.s2_star, r);
}

PhaseWindow build_window(const FluxModel& m, double r1, double r2) {
  if (!(m.sigma_s2() < r1 && r1 < r2 && r2 < m.sigma_s1()))
    throw Error(Errc::OutOfRange, "window needs sigma(s2) < r1 < r2 < sigma(s1), got r1=" + num(r1) +
                                      " r2=" + num(r2));
  PhaseWindow w;
  w.r1 = r1;
  w.r2 = r2;
  w.s_minus_r1 = branch_inverse(m, r1, Branch::Left);
  w.s_minus_r2 = branch_inverse(m, r2, Branch::Left);
  w.s_plus_r1 = branch_inverse(m, r1, Branch::Right);
  w.s_plus_r2 = branch_inverse(m, r2, Branch::Right);
  w.gap = w.s_plus_r1 - w.s_minus_r2;
  if (!(w.gap > 0.0)) throw Error(Errc::OutOfRange, "window gap not positive");
  return w;
}

double ModifiedFlux::eval(double s) const {
  if (s <= s_a) return base.eval(s);
  if (s >= s_b) return base.eval_right(s);
  const double L = blend, m = mid_slope;
  if (s <= s_a + L) {
    const double u = s - s_a;
    return sig_a + dsig_a * u + (m - dsig_a) * u * u / (2.0 * L);
  }
  if (s >= s_b - L) {
    const double w = s_b - s;
    return sig_b - (dsig_b * w + (m - dsig_b) * w * w / (2.0 * L));
  }
  return sig_a + 0.5 * L * (dsig_a + m) + m * (s - s_a - L);
}

double ModifiedFlux::slope(double s) const {
  if (s < s_a) return base.slope_left(s);
  if (s > s_b) return base.slope_right(s);
  const double L = blend, m = mid_slope;
  if (s <= s_a + L) return dsig_a + (m - dsig_a) * (s - s_a) / L;
  if (s >= s_b - L) return dsig_b + (m - dsig_b) * (s_b - s) / L;
  return m;
}

ModifiedFlux build_modified_flux(const FluxModel& model, const PhaseWindow& w) {
  ModifiedFlux f;
  f.base = model;
  f.s_a = w.s_minus_r1;
  f.s_b = w.s_plus_r2;
  f.sig_a = model.eval(f.s_a);
  f.sig_b = model.eval_right(f.s_b);
  f.dsig_a = model.slope_left(f.s_a);
  f.dsig_b = model.slope_right(f.s_b);
  const double D = f.s_b - f.s_a, Delta = f.sig_b - f.sig_a;

  constexpr int kSamples = 10000;
  double L = 0.1 * D;
  for (int attempt = 0; attempt <= 30; ++attempt, L *= 0.5) {
    f.blend = L;
    f.fallbacks = attempt;
    f.mid_slope = (Delta - 0.5 * L * (f.dsig_a + f.dsig_b)) / (D - L);
    if (!(f.mid_slope > 0.0)) continue;
    bool ok = true;
    for (int j = 1; j <= kSamples && ok; ++j) {
      const double s = f.s_a + (w.s_minus_r2 - f.s_a) * j / kSamples;
      ok = f.eval(s) < model.eval(s);
    }
    for (int j = 0; j < kSamples && ok; ++j) {
      const double s = w.s_plus_r1 + (f.s_b - w.s_plus_r1) * j / kSamples;
      ok = f.eval(s) > model.eval_right(s);
    }
    if (!ok) continue;

    // global slope bounds from samples plus the analytic pieces
    double lo = std::min({f.mid_slope, f.dsig_a, f.dsig_b, model.lambda_lo});
    double hi = std::max({f.mid_slope, f.dsig_a, f.dsig_b, model.lambda_hi});
    const double a = std::min(model.work_lo, f.s_a - 1.0), b = std::max(model.work_hi, f.s_b + 1.0);
    const double ds = (b - a) / kSamples;
    for (int j = 0; j < kSamples; ++j) {
      const double s = a + ds * j;
      const double sl = (f.eval(s + ds) - f.eval(s)) / ds;
      lo = std::min(lo, sl);
      hi = std::max(hi, sl);
    }
    if (!(lo > 0.0)) continue;
    f.lambda_tilde = lo;
    f.Lambda_tilde = hi;
    return f;
  }
  throw Error(Errc::ConstructionFailure, "no monotone modification satisfies the strict window inequalities");
}

KPrime::KPrime(const FluxModel& model, const PhaseWindow& window) : m_(model), w_(window) {
  left_ = sample_arc(m_, w_.s_minus_r1, w_.s_minus_r2, Branch::Left);
  right_ = sample_arc(m_, w_.s_plus_r1, w_.s_plus_r2, Branch::Right);
}

KPrime::Projection KPrime::project(double s, double g) const {
  const ArcHit a = project_arc(left_, s, g), b = project_arc(right_, s, g);
  Projection p;
  if (a.dist <= b.dist) {
    p.distance = a.dist;
    p.s_bar = a.s;
  } else {
    p.distance = b.dist;
    p.s_bar = b.s;
  }
  p.inside_U = inside_U(s, g);
  return p;
}

double KPrime::distance(double s, double g) const {
  return std::min(project_arc(left_, s, g).dist, project_arc(right_, s, g).dist);
}

bool KPrime::inside_U(double s, double g) const {
  if (!(g > w_.r1 && g < w_.r2)) return false;
  if (s <= w_.s_minus_r1 || s >= w_.s_plus_r2) return false;
  return s > branch_inverse(m_, g, Branch::Left) && s < branch_inverse(m_, g, Branch::Right);
}

double KPrime::distance_to_boundary(double s, double g) const {
  double d = distance(s, g), sx;
  d = std::min(d, point_segment(s, g, {w_.s_minus_r1, w_.r1}, {w_.s_plus_r1, w_.r1}, sx));
  d = std::min(d, point_segment(s, g, {w_.s_minus_r2, w_.r2}, {w_.s_plus_r2, w_.r2}, sx));
  return d;
}

double KPrime::diameter() const { return std::hypot(w_.s_plus_r2 - w_.s_minus_r1, w_.r2 - w_.r1); }

KPrime::Projection distance_to_Kprime(const PhaseWindow& window, const FluxModel& model, double s, double g) {
  return KPrime(model, window).project(s, g);
}

}  // namespace fbci
