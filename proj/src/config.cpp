#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "errors.hpp"

namespace fbci {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw Error(Errc::ConfigError, msg); }

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where + " must be a table");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    bad("bad value for '" + std::string(key) + "' in " + where);
  }
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) bad(where + " must be a number");
  return j.get<double>();
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.flux.s1 = 1.0;
  c.flux.s2 = 2.0;
  c.flux.segments = {{1.0, {0.0, 2.0, 0.0, 0.0}},
                     {2.0, {3.0, -1.0, 0.0, 0.0}},
                     {std::numeric_limits<double>::infinity(), {-3.0, 2.0, 0.0, 0.0}}};
  c.problem.T = 0.25;
  c.problem.epsilon = 0.1;
  c.problem.u0 = "1.5*x^2 - x^3";
  c.problem.b = "0.1*x";
  c.problem.d = std::string("0.05");
  c.problem.f = "0";
  c.densify.seed = 1;
  return c;
}

RunConfig parse_config(const json& j) {
  RunConfig c = default_config();
  only_keys(j, "config", {"flux", "window", "problem", "grid", "schedule", "seed", "verify", "output"});

  if (j.contains("flux")) {
    const json& f = j["flux"];
    only_keys(f, "flux", {"s1", "s2", "segments", "work_lo", "work_hi", "lambda_lo", "lambda_hi"});
    if (!f.contains("s1") || !f.contains("s2") || !f.contains("segments")) bad("flux needs s1, s2 and segments");
    c.flux = FluxDescription{};
    c.flux.s1 = num(f["s1"], "flux.s1");
    c.flux.s2 = num(f["s2"], "flux.s2");
    if (f.contains("work_lo")) c.flux.work_lo = num(f["work_lo"], "flux.work_lo");
    if (f.contains("work_hi")) c.flux.work_hi = num(f["work_hi"], "flux.work_hi");
    if (f.contains("lambda_lo")) c.flux.lambda_lo = num(f["lambda_lo"], "flux.lambda_lo");
    if (f.contains("lambda_hi")) c.flux.lambda_hi = num(f["lambda_hi"], "flux.lambda_hi");
    if (!f["segments"].is_array() || f["segments"].empty()) bad("flux.segments must be a non-empty array");
    for (const json& s : f["segments"]) {
      only_keys(s, "flux segment", {"upto", "coeffs"});
      PolySegment seg;
      if (s.contains("upto") && !s["upto"].is_null()) seg.upto = num(s["upto"], "segment upto");
      if (!s.contains("coeffs") || !s["coeffs"].is_array() || s["coeffs"].empty() || s["coeffs"].size() > 4)
        bad("segment coeffs must hold 1 to 4 numbers");
      for (size_t k = 0; k < s["coeffs"].size(); ++k) seg.c[k] = num(s["coeffs"][k], "segment coeff");
      c.flux.segments.push_back(seg);
    }
  }
  if (j.contains("window")) {
    const json& w = j["window"];
    only_keys(w, "window", {"r1", "r2"});
    read(w, "r1", c.r1, "window");
    read(w, "r2", c.r2, "window");
  }
  if (j.contains("problem")) {
    const json& p = j["problem"];
    only_keys(p, "problem", {"T", "epsilon", "u0", "b", "c", "d", "f"});
    read(p, "T", c.problem.T, "problem");
    read(p, "epsilon", c.problem.epsilon, "problem");
    read(p, "u0", c.problem.u0, "problem");
    read(p, "b", c.problem.b, "problem");
    read(p, "f", c.problem.f, "problem");
    if (p.contains("c")) {
      std::string s;
      read(p, "c", s, "problem");
      c.problem.c = s;
      c.problem.d.reset();
    }
    if (p.contains("d")) {
      std::string s;
      read(p, "d", s, "problem");
      c.problem.d = s;
    }
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    only_keys(g, "grid", {"nx", "nt"});
    read(g, "nx", c.nx, "grid");
    read(g, "nt", c.nt, "grid");
  }
  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    only_keys(s, "schedule",
              {"steps", "delta0", "delta0_factor", "eta0", "cap_policy", "max_refinements", "min_square", "halo"});
    read(s, "steps", c.densify.steps, "schedule");
    read(s, "delta0_factor", c.densify.delta0_factor, "schedule");
    if (s.contains("delta0") && !s["delta0"].is_null()) c.densify.delta0 = num(s["delta0"], "schedule.delta0");
    read(s, "eta0", c.densify.eta0, "schedule");
    read(s, "max_refinements", c.densify.max_refinements, "schedule");
    read(s, "min_square", c.densify.min_square, "schedule");
    read(s, "halo", c.densify.halo, "schedule");
    if (s.contains("cap_policy")) {
      std::string p;
      read(s, "cap_policy", p, "schedule");
      if (p == "strict") c.densify.policy = CapPolicy::Strict;
      else if (p == "resolved") c.densify.policy = CapPolicy::Resolved;
      else bad("cap_policy must be 'strict' or 'resolved'");
    }
  }
  if (j.contains("seed")) read(j, "seed", c.densify.seed, "config");
  if (j.contains("verify")) {
    const json& v = j["verify"];
    only_keys(v, "verify", {"max_p", "max_q", "time_samples", "residual_constant", "band_limit"});
    read(v, "max_p", c.weak.max_p, "verify");
    read(v, "max_q", c.weak.max_q, "verify");
    read(v, "time_samples", c.weak.time_samples, "verify");
    read(v, "residual_constant", c.residual_constant, "verify");
    read(v, "band_limit", c.band_limit, "verify");
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    only_keys(o, "output", {"dir"});
    read(o, "dir", c.out_dir, "output");
  }

  if (c.nx < 16 || c.nt < 16) bad("grid needs nx, nt >= 16");
  if (c.densify.steps < 0) bad("schedule.steps must be >= 0");
  if (c.densify.min_square < 8) bad("schedule.min_square must be >= 8");
  if (c.weak.time_samples < 1 || c.weak.max_p < 0 || c.weak.max_q < 0) bad("bad verify test family");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open config " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    bad(path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  json segs = json::array();
  for (const PolySegment& s : c.flux.segments) {
    json seg;
    seg["upto"] = std::isfinite(s.upto) ? json(s.upto) : json(nullptr);
    seg["coeffs"] = {s.c[0], s.c[1], s.c[2], s.c[3]};
    segs.push_back(seg);
  }
  json flux = {{"s1", c.flux.s1}, {"s2", c.flux.s2}, {"segments", segs},
               {"work_lo", c.flux.work_lo}, {"work_hi", c.flux.work_hi}};
  if (c.flux.lambda_lo) flux["lambda_lo"] = *c.flux.lambda_lo;
  if (c.flux.lambda_hi) flux["lambda_hi"] = *c.flux.lambda_hi;
  json prob = {{"T", c.problem.T}, {"epsilon", c.problem.epsilon}, {"u0", c.problem.u0},
               {"b", c.problem.b}, {"f", c.problem.f}};
  if (c.problem.d) prob["d"] = *c.problem.d;
  else if (c.problem.c) prob["c"] = *c.problem.c;
  json sched = {{"steps", c.densify.steps},
                {"delta0_factor", c.densify.delta0_factor},
                {"delta0", c.densify.delta0 ? json(*c.densify.delta0) : json(nullptr)},
                {"eta0", c.densify.eta0},
                {"cap_policy", c.densify.policy == CapPolicy::Strict ? "strict" : "resolved"},
                {"max_refinements", c.densify.max_refinements},
                {"min_square", c.densify.min_square},
                {"halo", c.densify.halo}};
  return {{"flux", flux},
          {"window", {{"r1", c.r1}, {"r2", c.r2}}},
          {"problem", prob},
          {"grid", {{"nx", c.nx}, {"nt", c.nt}}},
          {"schedule", sched},
          {"seed", c.densify.seed},
          {"verify",
           {{"max_p", c.weak.max_p},
            {"max_q", c.weak.max_q},
            {"time_samples", c.weak.time_samples},
            {"residual_constant", c.residual_constant},
            {"band_limit", c.band_limit}}},
          {"output", {{"dir", c.out_dir}}}};
}

}  // namespace fbci
