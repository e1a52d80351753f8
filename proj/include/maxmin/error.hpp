#ifndef MAXMIN_ERROR_HPP
#define MAXMIN_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace maxmin {

enum class ErrorKind {
    InvalidField,
    SingularPoint,
    BadEpsilon,
    ResolutionTooCoarse,
    IndexOutOfRange,
    InvalidFixedPoints,
    InvalidContour,
    EmptySet,
    FoldDetected,
    TestFunctionViolation,
    NodeCollision,
    SingularNode,
    GrowthViolation,
    NonConvergence,
    InitInvalid,
    TooFewProbes,
    TooCloseToSupport,
    IllConditioned,
    InsufficientSamples,
    BranchAmbiguity,
    RootfindingFailure,
    StepUnderflow,
    ComponentCountMismatch,
    Disconnected,
    ConfigError,
};

inline std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::InvalidField: return "InvalidField";
    case ErrorKind::SingularPoint: return "SingularPoint";
    case ErrorKind::BadEpsilon: return "BadEpsilon";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidFixedPoints: return "InvalidFixedPoints";
    case ErrorKind::InvalidContour: return "InvalidContour";
    case ErrorKind::EmptySet: return "EmptySet";
    case ErrorKind::FoldDetected: return "FoldDetected";
    case ErrorKind::TestFunctionViolation: return "TestFunctionViolation";
    case ErrorKind::NodeCollision: return "NodeCollision";
    case ErrorKind::SingularNode: return "SingularNode";
    case ErrorKind::GrowthViolation: return "GrowthViolation";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::InitInvalid: return "InitInvalid";
    case ErrorKind::TooFewProbes: return "TooFewProbes";
    case ErrorKind::TooCloseToSupport: return "TooCloseToSupport";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorKind::RootfindingFailure: return "RootfindingFailure";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::ComponentCountMismatch: return "ComponentCountMismatch";
    case ErrorKind::Disconnected: return "Disconnected";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

} // namespace maxmin

#endif
