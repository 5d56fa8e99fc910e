#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "forecrew/io.hpp"
#include "forecrew/model.hpp"
#include "forecrew/narrative.hpp"
#include "forecrew/replanner.hpp"
#include "forecrew/solver.hpp"

namespace forecrew {

enum class TaskStatus { Uninitiated, Ongoing, Completed };
std::string_view to_string(TaskStatus status) noexcept;

enum class EventKind {
    Genesis,
    ClockAdvanced,
    TaskStarted,
    TaskCompleted,
    InterventionApplied,
    Replanned,
    InterventionFailed,
};
std::string_view to_string(EventKind kind) noexcept;

struct TwinEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Genesis;
    Minutes clock = 0;
    std::string task;                      // TaskStarted, TaskCompleted
    std::optional<ProblemInstance> instance; // Genesis
    std::optional<Plan> plan;              // Genesis, Replanned
    std::string narrative;                 // InterventionApplied, InterventionFailed
    std::vector<ConstraintDelta> deltas;   // InterventionApplied
    std::vector<std::string> diagnostics;  // InterventionApplied, InterventionFailed
    PlanDelta delta;                       // Replanned
    Minutes makespan_before = 0;           // Replanned
    std::string error_code, error;         // InterventionFailed
};

/// Task/robot status view of execution. Statuses always follow from the incumbent plan and clock:
/// Ongoing iff start <= clock < end, Completed iff clock >= end.
struct TwinState {
    Minutes clock = 0;
    ProblemInstance instance;
    Plan plan;
    int plan_index = 0;
    std::map<std::string, TaskStatus> tasks;
    /// Unit id -> task being executed, empty when idle.
    std::map<std::string, std::string> robots;
    std::vector<TwinEvent> events;
};

/// Throws Error{PlanInvalid} when the plan fails verification.
TwinState init_state(const ProblemInstance &instance, const Plan &plan);

/// Throws Error{ClockRegression} when to_minutes < clock.
TwinState advance(const TwinState &state, Minutes to_minutes);

/// Turns a narrative into deltas. Throws on extraction failure.
using Extractor = std::function<Extraction(std::string_view narrative, const TaskKnowledgeBase &kb)>;
Extractor rule_extractor();
Extractor client_extractor(LanguageModelClient &client);

struct InterventionOutcome {
    TwinState state;
    bool applied = false;
    std::vector<ConstraintDelta> deltas;
    std::vector<std::string> diagnostics;
    std::optional<ReplanResult> replan;
    std::optional<ErrorCode> error_code; // ExtractionFailed, ReplanInfeasible, ...
    std::string error;
};

/// Extracts deltas, applies them and replans at T^R = clock. On any failure the instance, plan and
/// statuses are kept and only an InterventionFailed event is appended.
InterventionOutcome intervene(const TwinState &state, std::string_view narrative, const Extractor &extractor,
                              const SolveLimits &limits = {});

/// Applies one event to a state (the pure transition used by every operation).
void apply_event(TwinState &state, const TwinEvent &event);
/// Folds an event log, starting with its Genesis event.
TwinState replay(const std::vector<TwinEvent> &events);

/// Recomputes statuses and compares with the stored ones.
bool statuses_consistent(const TwinState &state);

Json event_to_json(const TwinEvent &event);
TwinEvent event_from_json(const Json &doc);
std::string events_to_ndjson(const std::vector<TwinEvent> &events);
std::vector<TwinEvent> events_from_ndjson(std::string_view text);

/// Snapshot without the event log.
Json snapshot_to_json(const TwinState &state);

} // namespace forecrew
