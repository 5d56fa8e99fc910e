#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forecrew {

enum class ErrorCode {
    ParseError,
    UnknownTask,
    UnknownRobotType,
    RemovingAbsentDependency,
    InvalidDelta,
    InstanceInvalid,
    BudgetZero,
    FrozenInfeasible,
    TaskSetMismatch,
    PlanInvalid,
    ClockRegression,
    EmptyNarrative,
    UnresolvedReference,
    ClientUnavailable,
    ResponseNotJson,
    EmptyGold,
    ExtractionFailed,
    ReplanInfeasible,
    UnknownSession,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    /// Message without the error-code prefix.
    [[nodiscard]] const std::string &detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace forecrew
