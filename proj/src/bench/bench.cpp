#include "forecrew/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "forecrew/program.hpp"
#include "forecrew/replanner.hpp"

namespace forecrew {

namespace {

constexpr std::string_view kModeNames[] = {"original", "windows", "conflicts", "replanning"};

std::mt19937_64 scenario_rng(std::uint64_t seed, std::size_t index, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

int uniform(std::mt19937_64 &rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string copy_id(const std::string &id) { return id + "b"; }

// Picks k distinct entries, in the order they appear in `pool`.
std::vector<std::string> sample(std::mt19937_64 &rng, const std::vector<std::string> &pool, std::size_t k) {
    std::vector<std::size_t> idx(pool.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i < idx.size(); ++i) {
        const auto j = static_cast<std::size_t>(uniform(rng, static_cast<int>(i), static_cast<int>(idx.size()) - 1));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(std::min(k, idx.size()));
    std::sort(idx.begin(), idx.end());
    std::vector<std::string> out;
    for (auto i : idx) out.push_back(pool[i]);
    return out;
}

void add_windows(ProblemInstance &instance, const std::vector<std::string> &ids, std::mt19937_64 &rng) {
    for (const auto &id : ids) {
        auto &task = instance.tasks[*instance.task_index(id)];
        task.window = TimeWindow{uniform(rng, 120, 240), std::nullopt};
    }
}

std::vector<std::string> ids_of(const ProblemInstance &instance) {
    std::vector<std::string> out;
    for (const auto &t : instance.tasks) out.push_back(t.id);
    return out;
}

} // namespace

std::string_view to_string(BenchMode mode) noexcept { return kModeNames[static_cast<int>(mode)]; }

std::optional<BenchMode> parse_bench_mode(std::string_view text) noexcept {
    for (int i = 0; i < 4; ++i) {
        if (kModeNames[i] == text) return static_cast<BenchMode>(i);
    }
    return std::nullopt;
}

std::vector<std::vector<std::string>> task_groups() {
    return {{"T1", "T6", "T7", "T12", "T13"}, {"T2", "T3", "T8", "T9"}, {"T4", "T5", "T10", "T11"}};
}

std::vector<std::string> conflict_tasks() { return {"T6", "T7", "T8", "T9", "T12", "T13"}; }

CountRange robot_count_range(std::string_view type_id) {
    if (type_id == "R1") return {1, 4};
    if (type_id == "R7") return {1, 1};
    return {1, 2};
}

Scenario generate_scenario(const ProblemInstance &site, BenchMode mode, std::uint64_t seed, std::size_t index) {
    auto rng = scenario_rng(seed, index, static_cast<std::uint64_t>(mode));
    Scenario sc;
    sc.index = index;
    sc.mode = mode;
    auto &inst = sc.instance;
    inst.capabilities = site.capabilities;
    inst.weights = site.weights;
    inst.robot_types = site.robot_types;
    for (auto &type : inst.robot_types) {
        const auto range = robot_count_range(type.id);
        type.count = uniform(rng, range.min, range.max);
    }

    std::map<std::string, int> copies;
    for (const auto &group : task_groups()) {
        const int n = uniform(rng, 1, 2);
        for (const auto &id : group) copies[id] = n;
    }
    std::vector<Task> second;
    for (const auto &task : site.tasks) {
        const auto it = copies.find(task.id);
        const int n = it == copies.end() ? 1 : it->second;
        inst.tasks.push_back(task);
        inst.tasks.back().window.reset();
        if (n < 2) continue;
        Task copy = task;
        copy.id = copy_id(task.id);
        copy.description = task.description + " (second set)";
        copy.aliases.clear();
        copy.window.reset();
        for (auto &p : copy.predecessors) p = copy_id(p);
        second.push_back(std::move(copy));
    }
    inst.tasks.insert(inst.tasks.end(), second.begin(), second.end());

    if (mode == BenchMode::Windows) {
        const auto chosen = sample(rng, ids_of(inst), static_cast<std::size_t>(uniform(rng, 1, 3)));
        add_windows(inst, chosen, rng);
    } else if (mode == BenchMode::Conflicts) {
        std::vector<std::string> members;
        for (const auto &id : conflict_tasks()) {
            members.push_back(id);
            if (copies[id] == 2) members.push_back(copy_id(id));
        }
        for (std::size_t a = 0; a < members.size(); ++a) {
            for (std::size_t b = a + 1; b < members.size(); ++b) inst.conflicts.emplace_back(members[a], members[b]);
        }
    }
    return sc;
}

ProblemInstance add_replan_windows(Scenario &scenario, const Plan &base, std::uint64_t seed) {
    auto rng = scenario_rng(seed, scenario.index, 0x5245504cu);
    scenario.replan_time = uniform(rng, 0, static_cast<int>(std::min<Minutes>(120, base.makespan)));
    std::vector<std::string> future;
    for (const auto &a : base.tasks) {
        if (a.start > scenario.replan_time) future.push_back(a.task);
    }
    auto inst = scenario.instance;
    scenario.windowed = sample(rng, future, static_cast<std::size_t>(uniform(rng, 1, 3)));
    add_windows(inst, scenario.windowed, rng);
    return inst;
}

BenchRow run_scenario(const ProblemInstance &site, BenchMode mode, std::uint64_t seed, std::size_t index,
                      const SolveLimits &limits) {
    BenchRow row;
    row.index = index;
    row.mode = mode;
    try {
        auto sc = generate_scenario(site, mode, seed, index);
        row.tasks = sc.instance.tasks.size();
        row.robots = sc.instance.expand_units().size();
        const auto program = build_program(sc.instance);
        auto [plan, stats] = solve(program, limits);
        ProblemInstance checked = sc.instance;
        if (mode == BenchMode::Replanning) {
            if (plan.status == SolveStatus::Infeasible || plan.status == SolveStatus::Unknown) {
                throw Error(ErrorCode::ReplanInfeasible, "base plan not found");
            }
            checked = add_replan_windows(sc, plan, seed);
            const auto counts = build_replan_program(checked, plan, sc.replan_time).counts();
            row.variables = counts.variables;
            row.constraints = counts.constraints;
            auto result = replan(ReplanContext{checked, plan, sc.replan_time}, limits);
            plan = std::move(result.plan);
            stats = result.stats;
        } else {
            const auto counts = program.counts();
            row.variables = counts.variables;
            row.constraints = counts.constraints;
        }
        row.status = std::string(to_string(plan.status));
        row.makespan = plan.makespan;
        row.objective = plan.objective;
        row.nodes = stats.nodes;
        row.seconds = stats.seconds;
        const bool has_plan = plan.status == SolveStatus::Optimal || plan.status == SolveStatus::FeasibleWithGap;
        const auto report = verify_plan(checked, plan);
        row.verified = has_plan && report.ok();
        if (has_plan && !report.ok()) row.error = "verify: " + report.summary();
        if (!has_plan) row.error = "no plan";
    } catch (const std::exception &e) {
        row.error = e.what();
    }
    while (!row.error.empty() && (row.error.back() == '\n' || row.error.back() == ' ')) row.error.pop_back();
    return row;
}

std::vector<BenchRow> run_bench(const ProblemInstance &site, const BenchOptions &options) {
    std::vector<BenchRow> rows(options.scenarios);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < rows.size();) {
            rows[i] = run_scenario(site, options.mode, options.seed, i, options.limits);
        }
    };
    unsigned n = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(rows.size(), 1)));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
    worker();
    for (auto &t : pool) t.join();
    return rows;
}

BenchSummary summarize(BenchMode mode, const std::vector<BenchRow> &rows) {
    BenchSummary s;
    s.mode = mode;
    s.scenarios = rows.size();
    s.min_tasks = rows.empty() ? 0 : rows.front().tasks;
    double total = 0.0;
    for (const auto &r : rows) {
        s.min_tasks = std::min(s.min_tasks, r.tasks);
        s.max_tasks = std::max(s.max_tasks, r.tasks);
        s.max_robots = std::max(s.max_robots, r.robots);
        s.max_variables = std::max(s.max_variables, r.variables);
        s.max_constraints = std::max(s.max_constraints, r.constraints);
        s.max_seconds = std::max(s.max_seconds, r.seconds);
        total += r.seconds;
        if (r.status == "Optimal") ++s.optimal;
        if (r.verified) ++s.verified;
        if (!r.error.empty()) ++s.failures;
    }
    s.avg_seconds = rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
    return s;
}

std::string bench_csv(const std::vector<BenchRow> &rows, bool include_timing) {
    std::ostringstream out;
    out << "index,mode,tasks,robots,variables,constraints,status,makespan_min,objective,verified";
    if (include_timing) out << ",nodes,seconds";
    out << ",error\n";
    for (const auto &r : rows) {
        std::string error = r.error;
        std::replace(error.begin(), error.end(), '"', '\'');
        std::replace(error.begin(), error.end(), '\n', ' ');
        out << r.index << ',' << to_string(r.mode) << ',' << r.tasks << ',' << r.robots << ',' << r.variables << ','
            << r.constraints << ',' << r.status << ',' << r.makespan << ',' << r.objective << ','
            << (r.verified ? 1 : 0);
        if (include_timing) {
            char secs[32];
            std::snprintf(secs, sizeof secs, "%.4f", r.seconds);
            out << ',' << r.nodes << ',' << secs;
        }
        out << ",\"" << error << "\"\n";
    }
    return out.str();
}

std::string summary_table(const std::vector<BenchSummary> &summaries) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-7s %-6s %-8s %-8s %-12s %-12s %-9s %-8s\n", "", "Tasks", "Robots",
                  "Max Vars", "Max Cons", "Max Time (s)", "Avg Time (s)", "Verified", "Optimal");
    out << line;
    for (const auto &s : summaries) {
        const auto tasks = std::to_string(s.min_tasks) + "-" + std::to_string(s.max_tasks);
        const auto verified = std::to_string(s.verified) + "/" + std::to_string(s.scenarios);
        const auto optimal = std::to_string(s.optimal) + "/" + std::to_string(s.scenarios);
        std::snprintf(line, sizeof line, "%-12s %-7s %-6zu %-8zu %-8zu %-12.2f %-12.2f %-9s %-8s\n",
                      std::string(to_string(s.mode)).c_str(), tasks.c_str(), s.max_robots, s.max_variables,
                      s.max_constraints, s.max_seconds, s.avg_seconds, verified.c_str(), optimal.c_str());
        out << line;
    }
    return out.str();
}

} // namespace forecrew
