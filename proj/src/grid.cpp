#include "grid.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace fbci {

Grid::Grid(int nx_, int nt_, double T_, int level_) : nx(nx_), nt(nt_), T(T_), level(level_) {
  if (nx < 16 || nt < 16) throw Error(Errc::InvalidArgument, "grid needs nx >= 16 and nt >= 16");
  if (!(T > 0.0)) throw Error(Errc::InvalidArgument, "final time must be positive");
}

Field::Field(const Grid& g, std::string nm, double fill) : grid(g), name(std::move(nm)), v(g.nodes(), fill) {}

bool Field::finite() const {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

double Field::max_abs() const {
  double m = 0.0;
  for (double a : v) m = std::max(m, std::abs(a));
  return m;
}

size_t CellMask::count() const {
  return static_cast<size_t>(std::count_if(m.begin(), m.end(), [](uint8_t a) { return a != 0; }));
}

Field sample(const Grid& g, const std::string& name, const std::function<double(double, double)>& fn) {
  Field f(g, name);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i <= g.nx; ++i) f(i, n) = fn(g.x(i), g.t(n));
  return f;
}

Field ddx(const Field& f, Scheme scheme) {
  const Grid& g = f.grid;
  const double h = g.h();
  Field d(g, f.name + "_x");
  for (int n = 0; n <= g.nt; ++n) {
    if (scheme == Scheme::Centered) {
      for (int i = 1; i < g.nx; ++i) d(i, n) = (f(i + 1, n) - f(i - 1, n)) / (2.0 * h);
      d(0, n) = (-3.0 * f(0, n) + 4.0 * f(1, n) - f(2, n)) / (2.0 * h);
      d(g.nx, n) = (3.0 * f(g.nx, n) - 4.0 * f(g.nx - 1, n) + f(g.nx - 2, n)) / (2.0 * h);
    } else {
      for (int i = 0; i < g.nx; ++i) d(i, n) = (f(i + 1, n) - f(i, n)) / h;
      d(g.nx, n) = (f(g.nx, n) - f(g.nx - 1, n)) / h;
    }
  }
  return d;
}

Field ddt(const Field& f) {
  const Grid& g = f.grid;
  const double dt = g.dt();
  Field d(g, f.name + "_t");
  for (int i = 0; i <= g.nx; ++i) {
    for (int n = 1; n < g.nt; ++n) d(i, n) = (f(i, n + 1) - f(i, n - 1)) / (2.0 * dt);
    d(i, 0) = (f(i, 1) - f(i, 0)) / dt;
    d(i, g.nt) = (f(i, g.nt) - f(i, g.nt - 1)) / dt;
  }
  return d;
}

double integrate_x(const Field& f, int n, double upto) {
  const Grid& g = f.grid;
  const double h = g.h();
  upto = std::clamp(upto, 0.0, 1.0);
  double acc = 0.0;
  int i = 0;
  for (; i < g.nx && g.x(i + 1) <= upto + 1e-15; ++i) acc += 0.5 * h * (f(i, n) + f(i + 1, n));
  if (i < g.nx) {
    const double r = upto - g.x(i);
    if (r > 0.0) {
      const double fr = f(i, n) + (f(i + 1, n) - f(i, n)) * r / h;
      acc += 0.5 * r * (f(i, n) + fr);
    }
  }
  return acc;
}

Field cumulative_x(const Field& f) {
  const Grid& g = f.grid;
  const double h = g.h();
  Field c(g, "int_" + f.name);
  for (int n = 0; n <= g.nt; ++n) {
    double acc = 0.0;
    c(0, n) = 0.0;
    for (int i = 0; i < g.nx; ++i) {
      acc += 0.5 * h * (f(i, n) + f(i + 1, n));
      c(i + 1, n) = acc;
    }
  }
  return c;
}

double integrate_xt(const Field& f, const CellMask& mask) {
  const Grid& g = f.grid;
  double acc = 0.0;
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i)
      if (mask(i, n)) acc += 0.25 * (f(i, n) + f(i + 1, n) + f(i, n + 1) + f(i + 1, n + 1));
  return acc * g.cell_area();
}

Grid refine_grid(const Grid& g, int factor) {
  if (factor < 2 || factor > 4) throw Error(Errc::InvalidArgument, "refinement factor must be 2, 3 or 4");
  return Grid(g.nx * factor, g.nt * factor, g.T, g.level + 1);
}

std::pair<Grid, Field> refine(const Grid& g, const Field& f, int factor) {
  const Grid fg = refine_grid(g, factor);
  Field out(fg, f.name);
  for (int n = 0; n <= fg.nt; ++n) {
    const int nc = std::min(n / factor, g.nt - 1);
    const double bt = static_cast<double>(n - nc * factor) / factor;
    for (int i = 0; i <= fg.nx; ++i) {
      const int ic = std::min(i / factor, g.nx - 1);
      const double ax = static_cast<double>(i - ic * factor) / factor;
      const double f00 = f(ic, nc), f10 = f(ic + 1, nc), f01 = f(ic, nc + 1), f11 = f(ic + 1, nc + 1);
      double val;
      if (ax == 0.0 && bt == 0.0) val = f00;
      else val = (1 - ax) * (1 - bt) * f00 + ax * (1 - bt) * f10 + (1 - ax) * bt * f01 + ax * bt * f11;
      out(i, n) = val;
    }
  }
  return {fg, out};
}

CellMask refine_mask(const CellMask& mask, int factor) {
  CellMask out(mask.nx * factor, mask.nt * factor);
  for (int n = 0; n < out.nt; ++n)
    for (int i = 0; i < out.nx; ++i) out(i, n) = mask(i / factor, n / factor);
  return out;
}

Field restrict_to(const Field& fine, const Grid& coarse) {
  const int fx = fine.grid.nx / coarse.nx, ft = fine.grid.nt / coarse.nt;
  if (fx * coarse.nx != fine.grid.nx || ft * coarse.nt != fine.grid.nt)
    throw Error(Errc::InvalidArgument, "grids are not nested");
  Field out(coarse, fine.name);
  for (int n = 0; n <= coarse.nt; ++n)
    for (int i = 0; i <= coarse.nx; ++i) out(i, n) = fine(i * fx, n * ft);
  return out;
}

}  // namespace fbci

namespace fbci {

std::vector<double> cell_dx(const Field& f) {
  const Grid& g = f.grid;
  std::vector<double> out(g.cells());
  const double h = g.h();
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i)
      out[g.cell(i, n)] = 0.5 * ((f(i + 1, n) - f(i, n)) + (f(i + 1, n + 1) - f(i, n + 1))) / h;
  return out;
}

std::vector<double> cell_dt(const Field& f) {
  const Grid& g = f.grid;
  std::vector<double> out(g.cells());
  const double dt = g.dt();
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i)
      out[g.cell(i, n)] = 0.5 * ((f(i, n + 1) - f(i, n)) + (f(i + 1, n + 1) - f(i + 1, n))) / dt;
  return out;
}

std::vector<double> cell_mean(const Field& f) {
  const Grid& g = f.grid;
  std::vector<double> out(g.cells());
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i)
      out[g.cell(i, n)] = 0.25 * (f(i, n) + f(i + 1, n) + f(i, n + 1) + f(i + 1, n + 1));
  return out;
}

}  // namespace fbci
