#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace whardy {

enum class ErrorCode {
  NonPositiveRadius,
  InvalidParams,
  OutsideSupport,
  DivergentIntegral,
  QuadratureFailure,
  ProfileUndefined,
  NoConvergence,
  BadBracket,
  InadmissibleGamma,
  NonIntegrableTestFunction,
  UnsupportedFunction,
  SchemeDivergence,
  NegativeDatum,
  DegenerateSeries,
  ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::OutsideSupport: return "OutsideSupport";
    case ErrorCode::DivergentIntegral: return "DivergentIntegral";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::ProfileUndefined: return "ProfileUndefined";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::BadBracket: return "BadBracket";
    case ErrorCode::InadmissibleGamma: return "InadmissibleGamma";
    case ErrorCode::NonIntegrableTestFunction: return "NonIntegrableTestFunction";
    case ErrorCode::UnsupportedFunction: return "UnsupportedFunction";
    case ErrorCode::SchemeDivergence: return "SchemeDivergence";
    case ErrorCode::NegativeDatum: return "NegativeDatum";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the toolkit carries one of the codes above so
/// callers (and the CLI exit-code mapping) can branch without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace whardy
