#pragma once

#include <stdexcept>
#include <string>

namespace fbci {

enum class Errc {
  // flux
  MonotonicityViolation,
  SignViolation,
  SlopeBoundViolation,
  OutOfRange,
  ConstructionFailure,
  // problem
  CompatibilityViolation,
  StructureViolation,
  NoTransitionPoint,
  ExpressionError,
  // parabolic
  NonConvergence,
  StabilityBreach,
  EmptyTransitionRegion,
  // oscillate
  UnresolvableSawtooth,
  BudgetInfeasible,
  OverlapViolation,
  SupportEscape,
  // densify
  DegenerateMargin,
  HaloExhausted,
  OscillationUnresolvable,
  RayEscape,
  RefinementNeeded,
  PostconditionFailure,
  IterationStalled,
  // plumbing
  ConfigError,
  IoError,
  InvalidArgument,
};

const char* errc_name(Errc c) noexcept;
const char* errc_module(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }
  // "module.Code: message"
  std::string qualified() const;

 private:
  Errc code_;
};

}  // namespace fbci
