#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refine {

enum class ErrorCode {
    EmptyCandidateSet,
    MissingEmbedding,
    MissingEntailment,
    BackendUnavailable,
    DimensionMismatch,
    RangeViolation,
    ParseError,
    ZeroVector,
    EmptyValidation,
    InvalidCoefficients,
    InvalidStep,
    MissingSample,
    ValidationFailed,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message)
      , code_{code} {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
        case ErrorCode::MissingEmbedding: return "MissingEmbedding";
        case ErrorCode::MissingEntailment: return "MissingEntailment";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::RangeViolation: return "RangeViolation";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::EmptyValidation: return "EmptyValidation";
        case ErrorCode::InvalidCoefficients: return "InvalidCoefficients";
        case ErrorCode::InvalidStep: return "InvalidStep";
        case ErrorCode::MissingSample: return "MissingSample";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace refine
