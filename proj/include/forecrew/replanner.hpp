#pragma once

#include <string>
#include <vector>

#include "forecrew/model.hpp"
#include "forecrew/solver.hpp"

namespace forecrew {

struct TaskSplit {
    /// Started at or before the replanning time (ongoing or completed); frozen.
    std::vector<std::string> past;
    /// Not yet started; free to be rescheduled.
    std::vector<std::string> future;
};

/// Partition by original start: start <= t_r is past. Order follows the plan.
TaskSplit split_tasks(const Plan &plan, Minutes t_r);

struct ReplanContext {
    /// Instance with the new constraints already applied.
    ProblemInstance instance;
    Plan original;
    Minutes replan_time = 0;
};

struct PlanDelta {
    std::int64_t reassignments = 0; // sum over future tasks of |x - x0|
    Minutes retiming = 0;           // sum over future tasks of |ts - ts0| + |te - te0|

    bool operator==(const PlanDelta &) const = default;
};

/// Throws Error{TaskSetMismatch} when the plans cover different tasks.
PlanDelta plan_delta(const Plan &original, const Plan &revised, const std::vector<std::string> &future);

struct ReplanResult {
    Plan plan;
    SolveStats stats;
    PlanDelta delta;
    TaskSplit split;
};

/// Re-optimizes future tasks with history frozen and deviations penalized. Future tasks start no
/// earlier than the replanning time. Throws Error{FrozenInfeasible, TaskSetMismatch, InstanceInvalid}.
ReplanResult replan(const ReplanContext &ctx, const SolveLimits &limits = {});

} // namespace forecrew
