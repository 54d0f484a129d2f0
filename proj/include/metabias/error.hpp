#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metabias {

enum class ErrorCode {
    DomainError,
    LengthMismatch,
    SingularDesign,
    NoBracket,
    EmptyInput,
    InsufficientStudies,
    NumericUnderflow,
    NoConvergedPoint,
    NotSignificant,
    NoSignificantStudies,
    EstimateAtBoundary,
    NoConvergence,
    TargetUnreachable,
    AllFailed,
    ParseError,
    ConfigError,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace metabias
