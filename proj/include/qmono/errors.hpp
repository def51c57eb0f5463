#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qmono {

enum class ErrorCode {
  NonPrimeModulus,
  RedundantAdjunction,
  InvalidDescriptor,
  DivisionByZero,
  ZeroCoefficient,
  IdenticallyZeroDenominator,
  PoleAtPoint,
  ParseError,
  NotUnimodular,
  CapExceeded,
  Unidentified,
  InvalidAction,
  UnsupportedKernelQuotient,
  NotInvariant,
  DecompositionInvalid,
  FaithfulnessPreconditionFailed,
  ModularCharacterUnsupported,
  DegenerateSampling,
  BadPrime,
  UndecidableAtHeightBound,
};

inline std::string_view error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::NonPrimeModulus: return "NonPrimeModulus";
    case ErrorCode::RedundantAdjunction: return "RedundantAdjunction";
    case ErrorCode::InvalidDescriptor: return "InvalidDescriptor";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::ZeroCoefficient: return "ZeroCoefficient";
    case ErrorCode::IdenticallyZeroDenominator: return "IdenticallyZeroDenominator";
    case ErrorCode::PoleAtPoint: return "PoleAtPoint";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::CapExceeded: return "CapExceeded";
    case ErrorCode::Unidentified: return "Unidentified";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::UnsupportedKernelQuotient: return "UnsupportedKernelQuotient";
    case ErrorCode::NotInvariant: return "NotInvariant";
    case ErrorCode::DecompositionInvalid: return "DecompositionInvalid";
    case ErrorCode::FaithfulnessPreconditionFailed: return "FaithfulnessPreconditionFailed";
    case ErrorCode::ModularCharacterUnsupported: return "ModularCharacterUnsupported";
    case ErrorCode::DegenerateSampling: return "DegenerateSampling";
    case ErrorCode::BadPrime: return "BadPrime";
    case ErrorCode::UndecidableAtHeightBound: return "UndecidableAtHeightBound";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qmono
