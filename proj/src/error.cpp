#include "metabias/error.hpp"

namespace metabias {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::NoBracket: return "NoBracket";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::InsufficientStudies: return "InsufficientStudies";
        case ErrorCode::NumericUnderflow: return "NumericUnderflow";
        case ErrorCode::NoConvergedPoint: return "NoConvergedPoint";
        case ErrorCode::NotSignificant: return "NotSignificant";
        case ErrorCode::NoSignificantStudies: return "NoSignificantStudies";
        case ErrorCode::EstimateAtBoundary: return "EstimateAtBoundary";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::TargetUnreachable: return "TargetUnreachable";
        case ErrorCode::AllFailed: return "AllFailed";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Error";
}

}  // namespace metabias
