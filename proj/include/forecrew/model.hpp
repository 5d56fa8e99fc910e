#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "forecrew/error.hpp"

namespace forecrew {

/// All times are whole minutes.
using Minutes = std::int64_t;

struct Capability {
    int id = 0;
    std::string name;

    bool operator==(const Capability &) const = default;
};

struct RobotType {
    std::string id;
    /// Amount of each capability, indexed by capability id.
    std::vector<int> capabilities;
    int count = 0;

    bool operator==(const RobotType &) const = default;
};

/// Earliest start and optional latest end. A window without an end is bounded by the horizon.
struct TimeWindow {
    Minutes earliest_start = 0;
    std::optional<Minutes> latest_end;

    bool operator==(const TimeWindow &) const = default;
};

struct Task {
    std::string id;
    std::string description;
    Minutes duration = 0;
    /// Required amount of each capability, indexed by capability id.
    std::vector<int> requirements;
    std::vector<std::string> predecessors;
    std::optional<TimeWindow> window;
    std::vector<std::string> aliases;

    bool operator==(const Task &) const = default;
};

struct ObjectiveWeights {
    std::int64_t makespan = 1000;    // C_m
    std::int64_t completion = 1;     // C_s
    std::int64_t robots = 1;         // C_r
    std::int64_t reassignment = 1;   // C_x
    std::int64_t retiming = 1;       // C_t

    bool operator==(const ObjectiveWeights &) const = default;
};

/// One robot of a type; units of a type are interchangeable and named "<type>#<k>".
struct RobotUnit {
    std::string id;
    std::size_t type = 0;
    int ordinal = 0;
};

struct ProblemInstance {
    std::vector<Capability> capabilities;
    std::vector<RobotType> robot_types;
    std::vector<Task> tasks;
    /// Unordered pairs of tasks that may not run concurrently.
    std::vector<std::pair<std::string, std::string>> conflicts;
    ObjectiveWeights weights;
    /// T_large; when unset, effective_horizon() derives one that fits any feasible schedule.
    std::optional<Minutes> horizon;

    [[nodiscard]] Minutes effective_horizon() const;
    [[nodiscard]] std::optional<std::size_t> task_index(std::string_view id) const;
    [[nodiscard]] std::optional<std::size_t> robot_type_index(std::string_view id) const;
    [[nodiscard]] std::optional<std::size_t> capability_index(std::string_view name) const;
    [[nodiscard]] std::vector<RobotUnit> expand_units() const;
    [[nodiscard]] bool has_conflict(std::string_view a, std::string_view b) const;

    bool operator==(const ProblemInstance &) const = default;
};

std::string unit_id(std::string_view type_id, int ordinal);

// ---------------------------------------------------------------------------
// Constraint deltas

enum class DeltaKind { Dependency = 1, Duration = 2, StartTime = 3, RobotCount = 4, Conflict = 5 };

struct DependencyChange {
    std::string task;       // predecessor
    std::string successor;
    bool add = true;        // '+' adds the edge, '-' removes it

    bool operator==(const DependencyChange &) const = default;
};

struct DurationChange {
    std::string task;
    Minutes duration = 0;

    bool operator==(const DurationChange &) const = default;
};

struct StartTimeChange {
    std::string task;
    Minutes shift = 0;

    bool operator==(const StartTimeChange &) const = default;
};

struct RobotCountChange {
    std::string robot_type;
    int change = 0;

    bool operator==(const RobotCountChange &) const = default;
};

struct ConflictChange {
    std::string first;
    std::string second;

    // Conflicts are unordered pairs.
    bool operator==(const ConflictChange &o) const {
        return (first == o.first && second == o.second) || (first == o.second && second == o.first);
    }
};

struct ConstraintDelta {
    using Change = std::variant<DependencyChange, DurationChange, StartTimeChange, RobotCountChange, ConflictChange>;
    Change change;

    ConstraintDelta() = default;
    template <typename C>
        requires std::is_constructible_v<Change, C>
    ConstraintDelta(C c) : change(std::move(c)) {}

    [[nodiscard]] DeltaKind kind() const noexcept { return static_cast<DeltaKind>(change.index() + 1); }
    bool operator==(const ConstraintDelta &) const = default;
};

std::string describe(const ConstraintDelta &delta);

/// Returns a diagnostic when the delta references unknown ids or carries an invalid payload.
std::optional<std::string> check_delta(const ProblemInstance &instance, const ConstraintDelta &delta);

/// Returns a new instance with the deltas applied in order.
/// Throws Error{UnknownTask, UnknownRobotType, RemovingAbsentDependency, InvalidDelta}.
ProblemInstance apply_deltas(const ProblemInstance &instance, const std::vector<ConstraintDelta> &deltas);

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
    DuplicateId,
    NonPositiveDuration,
    VectorLength,
    NegativeAmount,
    DanglingPredecessor,
    DependencyCycle,
    DanglingConflict,
    SelfConflict,
    MalformedWindow,
    UnserviceableTask,
    NegativeRobotCount,
    WeightDominance,
    HorizonTooSmall,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
    ViolationKind kind;
    std::vector<std::string> subjects;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] bool contains(ViolationKind kind, const std::vector<std::string> &subjects = {}) const;
    [[nodiscard]] std::string summary() const;
};

ValidationReport validate_instance(const ProblemInstance &instance);

/// True when the whole fleet together covers the task's requirements (and has at least one unit).
bool serviceable(const ProblemInstance &instance, const Task &task);

// ---------------------------------------------------------------------------
// Plans

enum class SolveStatus { Optimal, FeasibleWithGap, Infeasible, Unknown };

std::string_view to_string(SolveStatus status) noexcept;
std::optional<SolveStatus> parse_solve_status(std::string_view text) noexcept;

struct TaskAssignment {
    std::string task;
    Minutes start = 0;
    Minutes end = 0;
    /// Robot unit ids serving the task (x_ir = 1), sorted.
    std::vector<std::string> robots;

    bool operator==(const TaskAssignment &) const = default;
};

struct Plan {
    std::vector<TaskAssignment> tasks;
    Minutes makespan = 0;
    std::int64_t objective = 0;
    SolveStatus status = SolveStatus::Unknown;
    double gap = 0.0;

    [[nodiscard]] const TaskAssignment *find(std::string_view task) const;
    /// Schedules only, ignoring objective/status bookkeeping.
    [[nodiscard]] bool same_schedule(const Plan &other) const;

    bool operator==(const Plan &) const = default;
};

} // namespace forecrew
