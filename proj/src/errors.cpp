#include "errors.hpp"

namespace fbci {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::MonotonicityViolation: return "MonotonicityViolation";
    case Errc::SignViolation: return "SignViolation";
    case Errc::SlopeBoundViolation: return "SlopeBoundViolation";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::ConstructionFailure: return "ConstructionFailure";
    case Errc::CompatibilityViolation: return "CompatibilityViolation";
    case Errc::StructureViolation: return "StructureViolation";
    case Errc::NoTransitionPoint: return "NoTransitionPoint";
    case Errc::ExpressionError: return "ExpressionError";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::StabilityBreach: return "StabilityBreach";
    case Errc::EmptyTransitionRegion: return "EmptyTransitionRegion";
    case Errc::UnresolvableSawtooth: return "UnresolvableSawtooth";
    case Errc::BudgetInfeasible: return "BudgetInfeasible";
    case Errc::OverlapViolation: return "OverlapViolation";
    case Errc::SupportEscape: return "SupportEscape";
    case Errc::DegenerateMargin: return "DegenerateMargin";
    case Errc::HaloExhausted: return "HaloExhausted";
    case Errc::OscillationUnresolvable: return "OscillationUnresolvable";
    case Errc::RayEscape: return "RayEscape";
    case Errc::RefinementNeeded: return "RefinementNeeded";
    case Errc::PostconditionFailure: return "PostconditionFailure";
    case Errc::IterationStalled: return "IterationStalled";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

const char* errc_module(Errc c) noexcept {
  switch (c) {
    case Errc::MonotonicityViolation:
    case Errc::SignViolation:
    case Errc::SlopeBoundViolation:
    case Errc::OutOfRange:
    case Errc::ConstructionFailure:
      return "flux";
    case Errc::CompatibilityViolation:
    case Errc::StructureViolation:
    case Errc::NoTransitionPoint:
    case Errc::ExpressionError:
      return "problem";
    case Errc::NonConvergence:
    case Errc::StabilityBreach:
    case Errc::EmptyTransitionRegion:
      return "parabolic";
    case Errc::UnresolvableSawtooth:
    case Errc::BudgetInfeasible:
    case Errc::OverlapViolation:
    case Errc::SupportEscape:
      return "oscillate";
    case Errc::DegenerateMargin:
    case Errc::HaloExhausted:
    case Errc::OscillationUnresolvable:
    case Errc::RayEscape:
    case Errc::RefinementNeeded:
    case Errc::PostconditionFailure:
    case Errc::IterationStalled:
      return "densify";
    case Errc::ConfigError:
    case Errc::IoError:
    case Errc::InvalidArgument:
      return "cli";
  }
  return "unknown";
}

std::string Error::qualified() const {
  return std::string(errc_module(code_)) + "." + errc_name(code_) + ": " + what();
}

}  // namespace fbci
