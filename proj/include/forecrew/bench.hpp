#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "forecrew/model.hpp"
#include "forecrew/solver.hpp"

namespace forecrew {

enum class BenchMode { Original, Windows, Conflicts, Replanning };
std::string_view to_string(BenchMode mode) noexcept;
std::optional<BenchMode> parse_bench_mode(std::string_view text) noexcept;

/// Tasks that are drawn together, so dependencies stay inside a group.
std::vector<std::vector<std::string>> task_groups();
/// Tasks sharing the single worker in conflict mode.
std::vector<std::string> conflict_tasks();

struct Scenario {
    std::size_t index = 0;
    BenchMode mode = BenchMode::Original;
    /// Instance that is solved first (no windows in replanning mode).
    ProblemInstance instance;
    /// Replanning mode: replanning time and the windowed tasks added at that time.
    Minutes replan_time = 0;
    std::vector<std::string> windowed;
};

/// Builds scenario `index` of a seeded run from the site catalogue (all task templates and robot
/// types). Robot counts are uniform within [min,max] per type, each task group appears once or twice
/// (second copies get a "b" suffix). Window mode delays 1-3 tasks to start no earlier than a uniform
/// 2-4 h; conflict mode forbids concurrency among every copy of conflict_tasks(). Replanning windows
/// are drawn after the base solve, see add_replan_windows.
Scenario generate_scenario(const ProblemInstance &site, BenchMode mode, std::uint64_t seed, std::size_t index);

/// Replanning mode: picks T^R uniform in [0, min(120, makespan)] and delays 1-3 tasks that start after
/// T^R in the base plan. Returns the instance with the windows.
ProblemInstance add_replan_windows(Scenario &scenario, const Plan &base, std::uint64_t seed);

/// Robot count ranges per type id.
struct CountRange {
    int min = 1, max = 1;
};
CountRange robot_count_range(std::string_view type_id);

struct BenchRow {
    std::size_t index = 0;
    BenchMode mode = BenchMode::Original;
    std::size_t tasks = 0;
    std::size_t robots = 0;
    std::size_t variables = 0;
    std::size_t constraints = 0;
    std::string status;
    Minutes makespan = 0;
    std::int64_t objective = 0;
    std::uint64_t nodes = 0;
    double seconds = 0.0;
    bool verified = false;
    std::string error;
};

struct BenchSummary {
    BenchMode mode = BenchMode::Original;
    std::size_t scenarios = 0;
    std::size_t min_tasks = 0, max_tasks = 0;
    std::size_t max_robots = 0;
    std::size_t max_variables = 0, max_constraints = 0;
    double max_seconds = 0.0, avg_seconds = 0.0;
    std::size_t optimal = 0, verified = 0, failures = 0;
};

struct BenchOptions {
    BenchMode mode = BenchMode::Original;
    std::size_t scenarios = 1000;
    std::uint64_t seed = 42;
    SolveLimits limits;
    unsigned workers = 0; // 0: hardware concurrency
};

/// Runs one scenario; failures are recorded in the row, never thrown.
BenchRow run_scenario(const ProblemInstance &site, BenchMode mode, std::uint64_t seed, std::size_t index,
                      const SolveLimits &limits);
/// Rows ordered by scenario index regardless of worker count.
std::vector<BenchRow> run_bench(const ProblemInstance &site, const BenchOptions &options);

BenchSummary summarize(BenchMode mode, const std::vector<BenchRow> &rows);
/// One CSV line per row; timing columns are dropped when include_timing is false.
std::string bench_csv(const std::vector<BenchRow> &rows, bool include_timing = true);
/// Text table with one line per summary: tasks, robots, max vars, max cons, max/avg time.
std::string summary_table(const std::vector<BenchSummary> &summaries);

} // namespace forecrew
