#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forecrew/model.hpp"

namespace forecrew {

enum class VarKind { Binary, Integer };

enum class VarRole {
    Assign,         // x_ir
    RobotStart,     // t^s_ir
    RobotEnd,       // t^e_ir
    TaskStart,      // t^s_i
    TaskEnd,        // t^e_i
    ConflictOrder,  // y_ij
    DeviationPlus,  // positive part of a deviation term
    DeviationMinus, // negative part of a deviation term
};

struct Variable {
    std::string name;
    VarKind kind = VarKind::Integer;
    VarRole role = VarRole::TaskStart;
    Minutes lower = 0;
    Minutes upper = 0;
};

enum class Family { Linking, Dependency, Capability, NoOverlap, Window, Conflict, Frozen, Penalty };

std::string_view to_string(Family family) noexcept;

enum class Sense { LessEqual, GreaterEqual, Equal };

struct Term {
    std::size_t var = 0;
    std::int64_t coef = 0;
};

/// A linear row, optionally enforced only when the binary `indicator` equals 1.
struct LinearConstraint {
    Family family = Family::Linking;
    std::vector<Term> terms;
    Sense sense = Sense::Equal;
    std::int64_t rhs = 0;
    std::optional<std::size_t> indicator;
    std::string label;
};

/// One robot's optional intervals: at most one of the listed tasks runs at any time.
/// Expands to one ordering binary and two big-M rows per task pair.
struct NoOverlapGroup {
    std::size_t unit = 0;
    std::vector<std::size_t> tasks;
};

/// A candidate team as a count per robot type.
struct TypeTeam {
    std::vector<int> per_type;
    int size = 0;

    bool operator==(const TypeTeam &) const = default;
};

struct ReplanData {
    Minutes replan_time = 0;
    Plan original;
    /// Per task (instance order): true when the task is in the frozen set.
    std::vector<bool> frozen;
};

struct ProgramCounts {
    std::size_t variables = 0;
    std::size_t constraints = 0;
    /// With every no-overlap group expanded into pairwise ordering binaries and big-M rows.
    std::size_t expanded_variables = 0;
    std::size_t expanded_constraints = 0;
    std::map<std::string, std::size_t> constraints_by_family;
};

struct IntegerProgram {
    ProblemInstance instance;
    std::vector<RobotUnit> units;
    Minutes horizon = 0;
    /// Minimal covering teams per task.
    std::vector<std::vector<TypeTeam>> teams;
    /// Per task: units belonging to some minimal team (the x_ir that exist).
    std::vector<std::vector<std::size_t>> qualified;

    std::vector<Variable> variables;
    std::vector<LinearConstraint> constraints;
    std::vector<NoOverlapGroup> no_overlap;
    /// The makespan term of the objective is C_m times the maximum of these end variables.
    std::vector<std::size_t> makespan_over;
    /// Linear objective terms (C_s, C_r, and penalty terms).
    std::vector<Term> objective;
    std::int64_t objective_constant = 0;

    std::optional<ReplanData> replan;

    [[nodiscard]] ProgramCounts counts() const;
};

/// Minimal covering teams for one task, as type counts.
std::vector<TypeTeam> minimal_teams(const ProblemInstance &instance, const Task &task);

/// Builds the scheduling program. Throws Error{InstanceInvalid}.
IntegerProgram build_program(const ProblemInstance &instance);

/// Adds deviation penalties and frozen rows for replanning at `replan_time`.
/// Throws Error{InstanceInvalid, TaskSetMismatch, FrozenInfeasible}.
IntegerProgram build_replan_program(const ProblemInstance &instance, const Plan &original, Minutes replan_time);

} // namespace forecrew
