#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "forecrew/io.hpp"
#include "forecrew/model.hpp"
#include "forecrew/program.hpp"

namespace forecrew {

struct SolveLimits {
    double time_seconds = 120.0;
    std::uint64_t node_budget = 50'000'000;
    /// Relative optimality gap; 0 proves optimality.
    double gap = 0.0;
    /// Cooperative cancellation, checked at node boundaries.
    const std::atomic<bool> *stop = nullptr;
};

struct SolveStats {
    std::uint64_t nodes = 0;
    double seconds = 0.0;
    std::int64_t best_bound = 0;
    std::int64_t incumbent = 0;
    SolveStatus status = SolveStatus::Unknown;
    bool time_limit_hit = false;
    bool node_limit_hit = false;
    bool stopped = false;
};

Json stats_to_json(const SolveStats &stats);

/// Solves to proven optimality unless a limit stops the search first.
/// Throws Error{BudgetZero} for non-positive limits.
std::pair<Plan, SolveStats> solve(const IntegerProgram &program, const SolveLimits &limits = {});

/// Convenience: build_program + solve.
std::pair<Plan, SolveStats> solve_instance(const ProblemInstance &instance, const SolveLimits &limits = {});

/// C_m * makespan + C_s * sum of ends + C_r * team sizes.
std::int64_t base_objective(const ProblemInstance &instance, const Plan &plan);

enum class PlanFamily { Assignment, Bounds, Linking, Dependency, Capability, NoOverlap, Window, Conflict };

std::string_view to_string(PlanFamily family) noexcept;

struct PlanViolation {
    PlanFamily family;
    std::vector<std::string> subjects;
    std::string message;
};

struct PlanReport {
    std::vector<PlanViolation> violations;

    [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
    [[nodiscard]] bool contains(PlanFamily family, const std::vector<std::string> &subjects = {}) const;
    [[nodiscard]] std::string summary() const;
};

/// Checks a plan against every constraint family, independently of the solver.
PlanReport verify_plan(const ProblemInstance &instance, const Plan &plan);

} // namespace forecrew
