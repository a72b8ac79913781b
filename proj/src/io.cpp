#include "io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"

namespace fbci {

using nlohmann::json;

namespace {

void put_row(std::string& out, double x, double t, double v) {
  char buf[96];
  const int n = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", x, t, v);
  out.append(buf, static_cast<size_t>(n));
}

void dump(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::IoError, "write failed for " + path);
}

bool parse_double(const char* b, const char* e, double& v) {
  while (b < e && *b == ' ') ++b;
  const auto r = std::from_chars(b, e, v);
  return r.ec == std::errc() && r.ptr == e;
}

json field_values(const Field& f) { return f.v; }

}  // namespace

void write_field_csv(const std::string& path, const Field& f) {
  const Grid& g = f.grid;
  std::string s = "x,t,value\n";
  s.reserve(g.nodes() * 60);
  for (int n = 0; n <= g.nt; ++n)
    for (int i = 0; i <= g.nx; ++i) put_row(s, g.x(i), g.t(n), f(i, n));
  dump(path, s);
}

void write_cell_csv(const std::string& path, const Grid& g, const std::vector<double>& values) {
  std::string s = "x,t,value\n";
  s.reserve(g.cells() * 60);
  for (int n = 0; n < g.nt; ++n)
    for (int i = 0; i < g.nx; ++i) put_row(s, (i + 0.5) * g.h(), (n + 0.5) * g.dt(), values[g.cell(i, n)]);
  dump(path, s);
}

Field read_field_csv(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,t,value", 0) != 0)
    throw Error(Errc::IoError, path + ": missing x,t,value header");
  std::vector<std::array<double, 3>> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<double, 3> r{};
    const char* p = line.data();
    const char* end = p + line.size();
    for (int k = 0; k < 3; ++k) {
      const char* q = k < 2 ? std::find(p, end, ',') : end;
      if (q == end && k < 2) throw Error(Errc::IoError, path + ":" + std::to_string(lineno) + ": expected 3 columns");
      if (!parse_double(p, q, r[k])) throw Error(Errc::IoError, path + ":" + std::to_string(lineno) + ": bad number");
      p = q + 1;
    }
    rows.push_back(r);
  }
  // node layout: t-major rows of nx + 1 values
  int nx = 0;
  while (static_cast<size_t>(nx + 1) < rows.size() && rows[nx + 1][1] == rows[0][1]) ++nx;
  if (nx < 2 || rows.size() % static_cast<size_t>(nx + 1) != 0)
    throw Error(Errc::IoError, path + ": truncated or irregular node table (" + std::to_string(rows.size()) + " rows)");
  const int nt = static_cast<int>(rows.size() / static_cast<size_t>(nx + 1)) - 1;
  if (nt < 2) throw Error(Errc::IoError, path + ": too few time levels");
  const double T = rows.back()[1];
  Grid g(nx, nt, T);
  Field f(g, name);
  for (int n = 0; n <= nt; ++n)
    for (int i = 0; i <= nx; ++i) {
      const auto& r = rows[g.node(i, n)];
      if (std::abs(r[0] - g.x(i)) > 1e-9 || std::abs(r[1] - g.t(n)) > 1e-9 * std::max(1.0, T))
        throw Error(Errc::IoError, path + ": node order does not match a uniform grid");
      f(i, n) = r[2];
    }
  return f;
}

json mask_to_json(const CellMask& m) {
  json runs = json::array();
  size_t k = 0;
  while (k < m.m.size()) {
    size_t e = k;
    while (e < m.m.size() && m.m[e] == m.m[k]) ++e;
    runs.push_back({static_cast<int>(m.m[k]), e - k});
    k = e;
  }
  return {{"nx", m.nx}, {"nt", m.nt}, {"order", "t-major"}, {"runs", runs}};
}

CellMask mask_from_json(const json& j) {
  try {
    CellMask m(j.at("nx").get<int>(), j.at("nt").get<int>());
    size_t k = 0;
    for (const json& r : j.at("runs")) {
      const int v = r.at(0).get<int>();
      const size_t len = r.at(1).get<size_t>();
      if (k + len > m.m.size()) throw Error(Errc::IoError, "mask runs overflow the grid");
      std::fill(m.m.begin() + static_cast<long>(k), m.m.begin() + static_cast<long>(k + len), static_cast<uint8_t>(v));
      k += len;
    }
    if (k != m.m.size()) throw Error(Errc::IoError, "mask runs do not cover the grid");
    return m;
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("bad mask: ") + e.what());
  }
}

json base_to_json(const BaseSubsolution& b) {
  const Grid& g = b.grid();
  return {{"grid", {{"nx", g.nx}, {"nt", g.nt}, {"T", g.T}, {"level", g.level}}},
          {"delta_star", b.delta_star},
          {"m_star", b.m_star},
          {"gamma_base", b.gamma_base},
          {"partition",
           {{"tol", b.part.tol},
            {"delta_star", b.part.delta_star},
            {"strip_cells", b.part.strip_cells},
            {"labels", mask_to_json(b.part.label)},
            {"counts",
             {{"omega1", b.part.count(kOmega1)},
              {"omega2", b.part.count(kOmega2)},
              {"omega3", b.part.count(kOmega3)},
              {"omega0_minus", b.part.count(kOmega0Minus)},
              {"omega0_plus", b.part.count(kOmega0Plus)}}}}},
          {"solver",
           {{"steps", b.stats.steps},
            {"newton_total", b.stats.newton_total},
            {"newton_max_used", b.stats.newton_max_used},
            {"fallback_steps", b.stats.fallback_steps},
            {"substeps", b.stats.substeps}}},
          {"u_star", field_values(b.u_star)},
          {"v_star", field_values(b.v_star)}};
}

BaseSubsolution base_from_json(const json& j) {
  try {
    const json& gj = j.at("grid");
    Grid g(gj.at("nx").get<int>(), gj.at("nt").get<int>(), gj.at("T").get<double>(), gj.value("level", 0));
    BaseSubsolution b;
    b.u_star = Field(g, "u_star");
    b.v_star = Field(g, "v_star");
    b.u_star.v = j.at("u_star").get<std::vector<double>>();
    b.v_star.v = j.at("v_star").get<std::vector<double>>();
    if (b.u_star.v.size() != g.nodes() || b.v_star.v.size() != g.nodes())
      throw Error(Errc::IoError, "base fields do not match the grid");
    b.delta_star = j.at("delta_star").get<double>();
    b.m_star = j.at("m_star").get<double>();
    b.gamma_base = j.at("gamma_base").get<double>();
    const json& p = j.at("partition");
    b.part.tol = p.at("tol").get<double>();
    b.part.delta_star = p.at("delta_star").get<double>();
    b.part.strip_cells = p.at("strip_cells").get<int>();
    b.part.label = mask_from_json(p.at("labels"));
    if (b.part.label.nx != g.nx || b.part.label.nt != g.nt) throw Error(Errc::IoError, "partition does not match grid");
    const json& s = j.at("solver");
    b.stats.steps = s.value("steps", 0);
    b.stats.newton_total = s.value("newton_total", 0);
    b.stats.newton_max_used = s.value("newton_max_used", 0);
    b.stats.fallback_steps = s.value("fallback_steps", 0);
    b.stats.substeps = s.value("substeps", 0);
    return b;
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("bad base snapshot: ") + e.what());
  }
}

void write_json(const std::string& path, const json& j) { dump(path, j.dump(1) + "\n"); }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(Errc::IoError, path + ": " + e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir + ": " + ec.message());
}

}  // namespace fbci
