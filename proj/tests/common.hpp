#pragma once
// shared fixtures for the unit tests

#include <cmath>
#include <limits>

#include "config.hpp"
#include "flux.hpp"
#include "problem.hpp"

namespace fbci::test {

inline FluxModel reference_flux() { return validate_flux(default_config().flux); }

inline PhaseWindow reference_window() { return build_window(reference_flux(), 1.2, 1.8); }

inline ProblemDescription zero_problem(const std::string& u0 = "1.5*x^2 - x^3") {
  ProblemDescription p;
  p.T = 0.25;
  p.u0 = u0;
  p.b = "0";
  p.d = std::string("0");
  p.f = "0";
  return p;
}

}  // namespace fbci::test
