#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pll {

enum class ErrorCode {
    InvalidParameters,
    NoEquilibria,
    OutOfRange,
    ConditionInapplicable,
    SingularPoint,
    SignFlip,
    NoBracket,
    StepUnderflow,
    Undecided,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::NoEquilibria: return "NoEquilibria";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::ConditionInapplicable: return "ConditionInapplicable";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::SignFlip: return "SignFlip";
    case ErrorCode::NoBracket: return "NoBracket";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::Undecided: return "Undecided";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// True for failures of a numerical search, as opposed to bad input.
constexpr bool is_solver_failure(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NoBracket:
    case ErrorCode::Undecided:
    case ErrorCode::SignFlip:
    case ErrorCode::SingularPoint:
    case ErrorCode::StepUnderflow:
        return true;
    default:
        return false;
    }
}

} // namespace pll
