#pragma once

#include <stdexcept>
#include <string>

namespace gdbo {

enum class Errc {
  InvalidArgument,
  NonPositivePrior,
  LengthMismatch,
  DegenerateWindow,
  ZeroSurvival,
  EmptySet,
  EmptyPool,
  NonConvergence,
  NeverActivates,
  BetaNegative,
  ZeroPriorMass,
  SupportViolation,
  EmptyCandidates,
  OutOfRange,
  ZeroImprovementMass,
  ZeroDenominator,
  InconsistentBudget,
  TooShort,
  TooFew,
  MissingAudit,
  Alignment,
  Config,
  Io,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonPositivePrior: return "NonPositivePrior";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateWindow: return "DegenerateWindow";
    case Errc::ZeroSurvival: return "ZeroSurvival";
    case Errc::EmptySet: return "EmptySet";
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::NonConvergence: return "NonConvergence";
    case Errc::NeverActivates: return "NeverActivates";
    case Errc::BetaNegative: return "BetaNegative";
    case Errc::ZeroPriorMass: return "ZeroPriorMass";
    case Errc::SupportViolation: return "SupportViolation";
    case Errc::EmptyCandidates: return "EmptyCandidates";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::ZeroImprovementMass: return "ZeroImprovementMass";
    case Errc::ZeroDenominator: return "ZeroDenominator";
    case Errc::InconsistentBudget: return "InconsistentBudget";
    case Errc::TooShort: return "TooShort";
    case Errc::TooFew: return "TooFew";
    case Errc::MissingAudit: return "MissingAudit";
    case Errc::Alignment: return "Alignment";
    case Errc::Config: return "Config";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// throws when cond is false
inline void require(bool cond, Errc code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace gdbo
