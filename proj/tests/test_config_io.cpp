#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "parabolic.hpp"

using namespace fbci;
using namespace fbci::test;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("fbci_test_" + name);
  fs::create_directories(d);
  return d;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("shipped configs parse") {
  const RunConfig d = load_config(std::string(FBCI_SOURCE_DIR) + "/configs/default.json");
  CHECK(d.problem.b == "0.1*x");
  CHECK(d.problem.d.value() == "0.05");
  CHECK(d.nx == 256);
  CHECK(d.densify.policy == CapPolicy::Resolved);
  CHECK(d.densify.seed == 1u);
  CHECK(std::isinf(d.flux.segments.back().upto));
  const RunConfig l = load_config(std::string(FBCI_SOURCE_DIR) + "/configs/steady_lens.json");
  CHECK(l.problem.epsilon == 1.0);
  CHECK(l.densify.steps == 1);
}

TEST_CASE("built-in default matches the shipped default") {
  const RunConfig a = default_config();
  const RunConfig b = load_config(std::string(FBCI_SOURCE_DIR) + "/configs/default.json");
  nlohmann::json ja = to_json(a), jb = to_json(b);
  ja.erase("output");
  jb.erase("output");
  CHECK(ja == jb);
}

TEST_CASE("round trip through json") {
  RunConfig c = default_config();
  c.problem.f = "sin(x)";
  c.densify.steps = 2;
  c.densify.delta0 = 0.01;
  c.r1 = 1.3;
  const RunConfig back = parse_config(to_json(c));
  CHECK(back.problem.f == "sin(x)");
  CHECK(back.densify.steps == 2);
  CHECK(back.densify.delta0.value() == 0.01);
  CHECK(back.r1 == 1.3);
}

TEST_CASE("config errors") {
  CHECK(code_of([] { load_config(std::string(FBCI_SOURCE_DIR) + "/tests/data/bad_config.json"); }) ==
        Errc::ConfigError);
  CHECK(code_of([] { load_config("/nonexistent/config.json"); }) == Errc::IoError);
  nlohmann::json j = to_json(default_config());
  j["schedule"]["cap_policy"] = "loose";
  CHECK(code_of([&] { parse_config(j); }) == Errc::ConfigError);
  nlohmann::json k = to_json(default_config());
  k["grid"]["nx"] = "many";
  CHECK(code_of([&] { parse_config(k); }) == Errc::ConfigError);
  nlohmann::json m = to_json(default_config());
  m["flux"]["segments"][0]["coeffs"] = nlohmann::json::array({1, 2, 3, 4, 5});
  CHECK(code_of([&] { parse_config(m); }) == Errc::ConfigError);
}

TEST_CASE("field csv round trip is bit exact") {
  Grid g(20, 17, 0.3);
  Field f = sample(g, "f", [](double x, double t) { return std::exp(x) * std::sin(11 * t) / 3.0; });
  const fs::path p = scratch("csv") / "f.csv";
  write_field_csv(p.string(), f);
  Field back = read_field_csv(p.string(), "f");
  CHECK(back.grid.nx == 20);
  CHECK(back.grid.nt == 17);
  CHECK(back.grid.T == doctest::Approx(0.3));
  CHECK(back.v == f.v);
  std::ifstream in(p);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,t,value");
}

TEST_CASE("truncated or malformed csv is rejected") {
  Grid g(20, 20, 0.3);
  Field f(g, "f", 1.0);
  const fs::path d = scratch("bad_csv");
  write_field_csv((d / "f.csv").string(), f);
  std::ifstream in(d / "f.csv");
  std::stringstream all;
  all << in.rdbuf();
  const std::string s = all.str();
  {
    std::ofstream out(d / "cut.csv");
    out << s.substr(0, s.size() / 2);
  }
  CHECK(code_of([&] { read_field_csv((d / "cut.csv").string(), "f"); }) == Errc::IoError);
  {
    std::ofstream out(d / "junk.csv");
    out << "x,t,value\n0,0,abc\n";
  }
  CHECK(code_of([&] { read_field_csv((d / "junk.csv").string(), "f"); }) == Errc::IoError);
  CHECK(code_of([&] { read_field_csv((d / "missing.csv").string(), "f"); }) == Errc::IoError);
}

TEST_CASE("mask run-length round trip") {
  CellMask m(33, 21);
  for (int n = 0; n < 21; ++n)
    for (int i = 0; i < 33; ++i) m(i, n) = static_cast<uint8_t>((i * 7 + n * 3) % 5 == 0 ? 2 : (i > n ? 1 : 0));
  const nlohmann::json j = mask_to_json(m);
  CellMask back = mask_from_json(j);
  CHECK(back.nx == 33);
  CHECK(back.nt == 21);
  CHECK(back.m == m.m);
}

TEST_CASE("base state json round trip") {
  const FluxModel mdl = reference_flux();
  const PhaseWindow w = build_window(mdl, 1.2, 1.8);
  const ModifiedFlux sf = build_modified_flux(mdl, w);
  ProblemDescription p = zero_problem();
  p.b = "0.1*x";
  p.d = std::string("0.05");
  const BaseSubsolution b = build_base(make_spec(p), mdl, w, sf, Grid(64, 64, p.T));
  const fs::path f = scratch("base") / "base.json";
  write_json(f.string(), base_to_json(b));
  const BaseSubsolution r = base_from_json(read_json(f.string()));
  CHECK(r.u_star.v == b.u_star.v);
  CHECK(r.v_star.v == b.v_star.v);
  CHECK(r.part.label.m == b.part.label.m);
  CHECK(r.part.strip_cells == b.part.strip_cells);
  CHECK(r.delta_star == b.delta_star);
  CHECK(r.m_star == b.m_star);
  CHECK(r.gamma_base == b.gamma_base);
  CHECK(r.grid().T == b.grid().T);
}
