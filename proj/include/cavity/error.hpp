#pragma once

#include <stdexcept>
#include <string>

namespace cavity {

enum class ErrorKind {
  InvalidParameters,
  Pole,
  NegativeRadicand,
  OutsideBranchDomain,
  DegenerateLinearization,
  DiscriminantNonpositive,
  Coalescence,
  StartOutsideStrip,
  DomainExit,
  StepUnderflow,
  NonintegrableEndpoint,
  WrongArrivalSlope,
  DidNotReachP1,
  OutsideFluidRegion,
  FitWindowUnresolved,
  DivergentIntegral,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameters: return "invalid parameters";
    case ErrorKind::Pole: return "pole";
    case ErrorKind::NegativeRadicand: return "negative radicand";
    case ErrorKind::OutsideBranchDomain: return "outside branch domain";
    case ErrorKind::DegenerateLinearization: return "all partials vanish";
    case ErrorKind::DiscriminantNonpositive: return "discriminant nonpositive";
    case ErrorKind::Coalescence: return "P6 and P8 coalesce";
    case ErrorKind::StartOutsideStrip: return "start point outside trapping strip";
    case ErrorKind::DomainExit: return "domain exit";
    case ErrorKind::StepUnderflow: return "step underflow";
    case ErrorKind::NonintegrableEndpoint: return "nonintegrable endpoint";
    case ErrorKind::WrongArrivalSlope: return "wrong arrival slope";
    case ErrorKind::DidNotReachP1: return "did not reach P1";
    case ErrorKind::OutsideFluidRegion: return "outside fluid region";
    case ErrorKind::FitWindowUnresolved: return "fit window unresolved";
    case ErrorKind::DivergentIntegral: return "divergent integral";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto exit codes without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace cavity
