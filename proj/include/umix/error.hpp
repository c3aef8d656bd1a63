#pragma once

#include <stdexcept>
#include <string>

namespace umix {

enum class Errc {
  NonSquareMatrix,
  DeadSymbol,
  ThetaOutOfRange,
  DepthZero,
  LengthMismatch,
  InadmissibleWord,
  NotMixing,
  NoConvergence,
  NoSignChange,
  NonPositiveRoof,
  AOutOfWindow,
  MalformedExpression,
  DepthMismatch,
  OrderTooLarge,
  NotPrime,
  DimensionMismatch,
  NotZeroSum,
  NotAProductGroup,
  BadFactorSelection,
  NoAdmissiblePath,
  EmptyGeneratingSet,
  InadmissibleHead,
  BadRange,
  BadFactorization,
  InfeasibleConfig,
  BadIndex,
  HypothesesFail,
  SelectionFail,
  PreconditionFail,
  QuadratureUnderflow,
  HorizonTooDeep,
  NonpositiveRealPart,
  AllBelowFloor,
  ConfigParseError,
  ValidationError,
  IoError,
};

inline const char* errc_name(Errc e) {
  switch (e) {
    case Errc::NonSquareMatrix: return "NonSquareMatrix";
    case Errc::DeadSymbol: return "DeadSymbol";
    case Errc::ThetaOutOfRange: return "ThetaOutOfRange";
    case Errc::DepthZero: return "DepthZero";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InadmissibleWord: return "InadmissibleWord";
    case Errc::NotMixing: return "NotMixing";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::NoSignChange: return "NoSignChange";
    case Errc::NonPositiveRoof: return "NonPositiveRoof";
    case Errc::AOutOfWindow: return "AOutOfWindow";
    case Errc::MalformedExpression: return "MalformedExpression";
    case Errc::DepthMismatch: return "DepthMismatch";
    case Errc::OrderTooLarge: return "OrderTooLarge";
    case Errc::NotPrime: return "NotPrime";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotZeroSum: return "NotZeroSum";
    case Errc::NotAProductGroup: return "NotAProductGroup";
    case Errc::BadFactorSelection: return "BadFactorSelection";
    case Errc::NoAdmissiblePath: return "NoAdmissiblePath";
    case Errc::EmptyGeneratingSet: return "EmptyGeneratingSet";
    case Errc::InadmissibleHead: return "InadmissibleHead";
    case Errc::BadRange: return "BadRange";
    case Errc::BadFactorization: return "BadFactorization";
    case Errc::InfeasibleConfig: return "InfeasibleConfig";
    case Errc::BadIndex: return "BadIndex";
    case Errc::HypothesesFail: return "HypothesesFail";
    case Errc::SelectionFail: return "SelectionFail";
    case Errc::PreconditionFail: return "PreconditionFail";
    case Errc::QuadratureUnderflow: return "QuadratureUnderflow";
    case Errc::HorizonTooDeep: return "HorizonTooDeep";
    case Errc::NonpositiveRealPart: return "NonpositiveRealPart";
    case Errc::AllBelowFloor: return "AllBelowFloor";
    case Errc::ConfigParseError: return "ConfigParseError";
    case Errc::ValidationError: return "ValidationError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a stable error code; what() is "Code: detail".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace umix
