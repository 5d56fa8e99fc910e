#include "forecrew/error.hpp"

namespace forecrew {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownTask: return "UnknownTask";
    case ErrorCode::UnknownRobotType: return "UnknownRobotType";
    case ErrorCode::RemovingAbsentDependency: return "RemovingAbsentDependency";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::InstanceInvalid: return "InstanceInvalid";
    case ErrorCode::BudgetZero: return "BudgetZero";
    case ErrorCode::FrozenInfeasible: return "FrozenInfeasible";
    case ErrorCode::TaskSetMismatch: return "TaskSetMismatch";
    case ErrorCode::PlanInvalid: return "PlanInvalid";
    case ErrorCode::ClockRegression: return "ClockRegression";
    case ErrorCode::EmptyNarrative: return "EmptyNarrative";
    case ErrorCode::UnresolvedReference: return "UnresolvedReference";
    case ErrorCode::ClientUnavailable: return "ClientUnavailable";
    case ErrorCode::ResponseNotJson: return "ResponseNotJson";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::ExtractionFailed: return "ExtractionFailed";
    case ErrorCode::ReplanInfeasible: return "ReplanInfeasible";
    case ErrorCode::UnknownSession: return "UnknownSession";
    }
    return "Error";
}

} // namespace forecrew
