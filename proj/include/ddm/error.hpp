#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddm {

/// Failure categories raised by the valuation modules. The CLI prints the
/// name of the kind verbatim, so names are part of the external contract.
enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    SingularMatrix,
    NotStochastic,
    InvariantViolated,
    NonConvergent,
    DegeneratePhase,
    InsufficientHistory,
    TransversalityViolated,
    StateOutOfRange,
    SystemTooLarge,
    DegenerateBins,
    ZeroVarianceMarket,
    HorizonTooShort,
    ParseError,
    NonPositiveDividend,
    DuplicateDate,
    IoError,
};

constexpr std::string_view error_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::SingularMatrix: return "SingularMatrix";
        case ErrorKind::NotStochastic: return "NotStochastic";
        case ErrorKind::InvariantViolated: return "InvariantViolated";
        case ErrorKind::NonConvergent: return "NonConvergent";
        case ErrorKind::DegeneratePhase: return "DegeneratePhase";
        case ErrorKind::InsufficientHistory: return "InsufficientHistory";
        case ErrorKind::TransversalityViolated: return "TransversalityViolated";
        case ErrorKind::StateOutOfRange: return "StateOutOfRange";
        case ErrorKind::SystemTooLarge: return "SystemTooLarge";
        case ErrorKind::DegenerateBins: return "DegenerateBins";
        case ErrorKind::ZeroVarianceMarket: return "ZeroVarianceMarket";
        case ErrorKind::HorizonTooShort: return "HorizonTooShort";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NonPositiveDividend: return "NonPositiveDividend";
        case ErrorKind::DuplicateDate: return "DuplicateDate";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(error_name(kind)) + ": " + detail), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    std::string_view name() const noexcept { return error_name(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) {
    throw Error(kind, detail);
}

}  // namespace ddm
