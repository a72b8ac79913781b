#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "densify.hpp"
#include "flux.hpp"
#include "problem.hpp"
#include "verify.hpp"

namespace fbci {

struct RunConfig {
  FluxDescription flux;
  double r1 = 1.2, r2 = 1.8;
  ProblemDescription problem;
  int nx = 256, nt = 256;
  DensifyConfig densify;
  WeakResidualOptions weak;
  double residual_constant = 10.0;  // pass when residual <= C (h + dt + delta_final)
  double band_limit = 0.05;
  std::string out_dir = "out";
};

// reference piecewise-linear flux with the default problem
RunConfig default_config();

// ConfigError on unknown keys, wrong types or missing required fields
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json to_json(const RunConfig& c);

}  // namespace fbci
