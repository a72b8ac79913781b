#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace fbci {

struct Grid {
  int nx = 16;
  int nt = 16;
  double T = 1.0;
  int level = 0;

  Grid() = default;
  Grid(int nx_, int nt_, double T_, int level_ = 0);

  double h() const { return 1.0 / nx; }
  double dt() const { return T / nt; }
  double x(int i) const { return static_cast<double>(i) / nx; }
  double t(int n) const { return T * static_cast<double>(n) / nt; }
  size_t nodes() const { return static_cast<size_t>(nx + 1) * static_cast<size_t>(nt + 1); }
  size_t cells() const { return static_cast<size_t>(nx) * static_cast<size_t>(nt); }
  size_t node(int i, int n) const { return static_cast<size_t>(n) * (nx + 1) + i; }
  size_t cell(int i, int n) const { return static_cast<size_t>(n) * nx + i; }
  double cell_area() const { return h() * dt(); }
  bool operator==(const Grid& o) const { return nx == o.nx && nt == o.nt && T == o.T; }
};

// Node-centred field, row-major in time: value(i, n) at (x_i, t_n).
struct Field {
  Grid grid;
  std::string name;
  std::vector<double> v;

  Field() = default;
  Field(const Grid& g, std::string nm, double fill = 0.0);

  double& operator()(int i, int n) { return v[grid.node(i, n)]; }
  double operator()(int i, int n) const { return v[grid.node(i, n)]; }
  bool finite() const;
  double max_abs() const;
};

// Cell-centred flag array over the nx x nt cells.
struct CellMask {
  int nx = 0;
  int nt = 0;
  std::vector<uint8_t> m;

  CellMask() = default;
  CellMask(int nx_, int nt_, uint8_t fill = 0) : nx(nx_), nt(nt_), m(static_cast<size_t>(nx_) * nt_, fill) {}
  explicit CellMask(const Grid& g, uint8_t fill = 0) : CellMask(g.nx, g.nt, fill) {}

  uint8_t& operator()(int i, int n) { return m[static_cast<size_t>(n) * nx + i]; }
  uint8_t operator()(int i, int n) const { return m[static_cast<size_t>(n) * nx + i]; }
  size_t count() const;
};

enum class Scheme { Centered, OneSided };

Field sample(const Grid& g, const std::string& name, const std::function<double(double, double)>& fn);

// Centred differences inside, second-order one-sided at x = 0, 1 (Centered);
// forward differences with a backward difference on the last node (OneSided).
Field ddx(const Field& f, Scheme scheme = Scheme::Centered);
// Centred in the interior, first-order one-sided at t = 0, T.
Field ddt(const Field& f);
// Trapezoid integral of row n from 0 up to x (linear interpolation in the last cell).
double integrate_x(const Field& f, int n, double upto);
// Per-row cumulative trapezoid from x = 0.
Field cumulative_x(const Field& f);
// Sum of cell averages times cell area over the masked cells.
double integrate_xt(const Field& f, const CellMask& mask);

// Bilinear interpolation onto a grid with nx, nt multiplied by factor (2, 3 or 4).
std::pair<Grid, Field> refine(const Grid& g, const Field& f, int factor);
Grid refine_grid(const Grid& g, int factor);
CellMask refine_mask(const CellMask& mask, int factor);
// Injection of a refined field back onto the coarse nodes.
Field restrict_to(const Field& fine, const Grid& coarse);

}  // namespace fbci

namespace fbci {

// Box-scheme cell values: x-difference averaged over the two time levels, t-difference
// averaged over the two x nodes, and the four-corner mean.
std::vector<double> cell_dx(const Field& f);
std::vector<double> cell_dt(const Field& f);
std::vector<double> cell_mean(const Field& f);

}  // namespace fbci
