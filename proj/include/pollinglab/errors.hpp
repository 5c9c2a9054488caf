#pragma once

#include <stdexcept>
#include <string>

namespace pollinglab {

enum class ErrorCode {
    Unstable,
    UnsupportedAnalytic,
    ZeroSwitchover,
    InvalidParameter,
    ToleranceNotReached,
    GridTooCoarse,
    TruncationInsufficient,
    NoConvergence,
    DegenerateCondition,
    SingularSystem,
    ReconciliationFailure,
    AsymmetricModel,
    HorizonTooSmall,
    NoWaitingObserved,
    ParseError,
    IoError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::Unstable: return "Unstable";
        case ErrorCode::UnsupportedAnalytic: return "UnsupportedAnalytic";
        case ErrorCode::ZeroSwitchover: return "ZeroSwitchover";
        case ErrorCode::InvalidParameter: return "InvalidParameter";
        case ErrorCode::ToleranceNotReached: return "ToleranceNotReached";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::TruncationInsufficient: return "TruncationInsufficient";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DegenerateCondition: return "DegenerateCondition";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::ReconciliationFailure: return "ReconciliationFailure";
        case ErrorCode::AsymmetricModel: return "AsymmetricModel";
        case ErrorCode::HorizonTooSmall: return "HorizonTooSmall";
        case ErrorCode::NoWaitingObserved: return "NoWaitingObserved";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// All library failures surface as PollingError with a structured code,
/// so the CLI can map them onto its exit-code contract.
class PollingError : public std::runtime_error {
public:
    PollingError(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /// Validation errors exit with 2, numeric errors with 3, I/O with 4.
    int exit_class() const noexcept {
        switch (code_) {
            case ErrorCode::Unstable:
            case ErrorCode::UnsupportedAnalytic:
            case ErrorCode::ZeroSwitchover:
            case ErrorCode::InvalidParameter:
            case ErrorCode::AsymmetricModel:
            case ErrorCode::ParseError:
                return 2;
            case ErrorCode::IoError:
                return 4;
            default:
                return 3;
        }
    }

private:
    ErrorCode code_;
};

}  // namespace pollinglab
