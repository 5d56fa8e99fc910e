// Acceptance run: one PASS/FAIL line per criterion; exit status 1 when any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

#include "forecrew/bench.hpp"
#include "forecrew/program.hpp"
#include "forecrew/replanner.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace forecrew;

namespace {

constexpr Minutes kCaseStudyMakespan = 315;
constexpr double kCaseStudySeconds = 120.0;
constexpr int kOracleInstances = 400;
constexpr int kOracleReplans = 400;
constexpr std::size_t kScenariosPerMode = 500;
constexpr double kScenarioSeconds = 0.25;
constexpr std::size_t kMaxVariables = 345;
constexpr std::size_t kMaxConstraints = 379;
constexpr std::uint64_t kCorpusSeed = 42;

struct Check {
    bool ok = true;
    std::ostringstream why;
    void expect(bool cond, const std::string &what) {
        if (!cond && ok) why << what;
        ok = ok && cond;
    }
};

int failures = 0;

void run(const char *name, const std::function<std::string(Check &)> &body) {
    Check c;
    std::string detail;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        detail = body(c);
    } catch (const std::exception &e) {
        c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s (%s; %.1f s)%s%s\n", c.ok ? "PASS" : "FAIL", name, detail.c_str(), secs,
                c.ok ? "" : ": ", c.ok ? "" : c.why.str().c_str());
    std::fflush(stdout);
    failures += !c.ok;
}

ProblemInstance small_instance(std::mt19937 &rng, int tasks, bool extras) {
    auto inst = oracle::random_instance(rng, tasks, extras);
    auto &a = inst.robot_types[0].count;
    auto &b = inst.robot_types[1].count;
    if (a + b > 3) b = 3 - a;
    return inst;
}

// Largest scenario the generator can emit: every group copied, every count at its upper bound and
// three windowed tasks.
ProblemInstance largest_scenario(const ProblemInstance &site, bool windows) {
    ProblemInstance inst = site;
    for (auto &t : inst.robot_types) t.count = robot_count_range(t.id).max;
    std::vector<Task> copies;
    for (const auto &group : task_groups()) {
        for (const auto &id : group) {
            Task copy = inst.tasks[*inst.task_index(id)];
            copy.id += "b";
            copy.aliases.clear();
            for (auto &p : copy.predecessors) p += "b";
            copies.push_back(copy);
        }
    }
    inst.tasks.insert(inst.tasks.end(), copies.begin(), copies.end());
    for (auto &t : inst.tasks) t.window.reset();
    if (windows) {
        for (int i = 0; i < 3; ++i) inst.tasks[static_cast<std::size_t>(i)].window = TimeWindow{240, std::nullopt};
    }
    return inst;
}

} // namespace

int main() {
    run("case-study optimum", [](Check &c) {
        const auto inst = fixtures::case_study();
        const auto [plan, stats] = solve_instance(inst);
        c.expect(plan.status == SolveStatus::Optimal, "status " + std::string(to_string(plan.status)));
        c.expect(plan.makespan == kCaseStudyMakespan, "makespan " + std::to_string(plan.makespan));
        c.expect(stats.seconds < kCaseStudySeconds, "too slow");
        c.expect(verify_plan(inst, plan).ok(), "plan fails verification");
        return "makespan " + std::to_string(plan.makespan) + " min, " + std::to_string(stats.nodes) + " nodes";
    });

    run("replanning golden", [](Check &c) {
        const auto inst = fixtures::case_study();
        const auto original = fixtures::reference_plan();
        c.expect(verify_plan(inst, original).ok(), "reference plan invalid");
        c.expect(base_objective(inst, original) == solve_instance(inst).first.objective,
                 "reference plan is not an optimum");

        const auto updated = apply_deltas(inst, {StartTimeChange{"T4", 30}});
        const auto r = replan(ReplanContext{updated, original, 12});
        c.expect(r.plan.status == SolveStatus::Optimal, "replan not optimal");
        c.expect(verify_plan(updated, r.plan).ok(), "replan fails verification");
        for (const auto &id : r.split.past) c.expect(*r.plan.find(id) == *original.find(id), id + " moved");
        const auto &t4 = *r.plan.find("T4");
        const auto &t5 = *r.plan.find("T5");
        c.expect(t4.robots.size() == 1 && t4.robots == t5.robots && t4.robots[0].rfind("R1#", 0) == 0,
                 "T4 and T5 not on one R1 unit");
        c.expect(t5.end <= t4.start, "T5 does not precede T4");

        const auto zero = replan(ReplanContext{inst, original, 12});
        c.expect(zero.delta.reassignments == 0 && zero.delta.retiming == 0, "zero-delta replan moved tasks");
        return "frozen " + std::to_string(r.split.past.size()) + ", T5 " + std::to_string(t5.start) + "-" +
               std::to_string(t5.end) + " then T4 " + std::to_string(t4.start) + "-" + std::to_string(t4.end) +
               " on " + t4.robots[0];
    });

    run("oracle equivalence", [](Check &c) {
        int solved = 0, replans = 0, seed = 0;
        while (solved < kOracleInstances) {
            std::mt19937 rng(static_cast<unsigned>(seed++));
            const auto inst = small_instance(rng, 1 + seed % 5, seed % 2 == 0);
            if (!validate_instance(inst).ok()) continue;
            const auto [plan, stats] = solve_instance(inst);
            const auto ref = oracle::solve(inst);
            if (ref.feasible) {
                c.expect(plan.status == SolveStatus::Optimal && plan.objective == ref.objective,
                         "solve seed " + std::to_string(seed - 1));
            } else {
                c.expect(plan.status == SolveStatus::Infeasible, "infeasible seed " + std::to_string(seed - 1));
            }
            ++solved;
        }
        seed = 0;
        while (replans < kOracleReplans) {
            std::mt19937 rng(static_cast<unsigned>(100000 + seed++));
            const auto inst = small_instance(rng, 1 + seed % 4, seed % 2 == 0);
            if (!validate_instance(inst).ok()) continue;
            const auto base = solve_instance(inst).first;
            if (base.status != SolveStatus::Optimal) continue;
            const Minutes t_r = std::uniform_int_distribution<int>(0, static_cast<int>(base.makespan))(rng);
            const auto &victim = inst.tasks[static_cast<std::size_t>(seed) % inst.tasks.size()].id;
            const auto updated = apply_deltas(inst, {StartTimeChange{victim, 1 + seed % 3}});
            if (!validate_instance(updated).ok()) continue;
            const auto ref = oracle::replan(updated, base, t_r);
            try {
                const auto r = replan(ReplanContext{updated, base, t_r});
                if (ref.feasible) {
                    c.expect(r.plan.status == SolveStatus::Optimal && r.plan.objective == ref.objective,
                             "replan seed " + std::to_string(seed - 1));
                } else {
                    c.expect(r.plan.status == SolveStatus::Infeasible, "replan infeasible seed " + std::to_string(seed - 1));
                }
            } catch (const Error &e) {
                c.expect(!ref.feasible && e.code() == ErrorCode::FrozenInfeasible,
                         "replan seed " + std::to_string(seed - 1) + ": " + e.what());
            }
            ++replans;
        }
        return std::to_string(solved) + " solves, " + std::to_string(replans) + " replans";
    });

    run("feasibility suite", [](Check &c) {
        const auto site = fixtures::site();
        std::ostringstream detail;
        detail << std::fixed << std::setprecision(3);
        for (auto mode : {BenchMode::Original, BenchMode::Windows, BenchMode::Conflicts, BenchMode::Replanning}) {
            BenchOptions opt;
            opt.mode = mode;
            opt.scenarios = kScenariosPerMode;
            opt.limits.time_seconds = kScenarioSeconds;
            const auto rows = run_bench(site, opt);
            const auto s = summarize(mode, rows);
            c.expect(s.verified == s.scenarios, std::string(to_string(mode)) + " has unverified plans");
            if (mode == BenchMode::Original || mode == BenchMode::Windows) {
                c.expect(s.max_variables <= kMaxVariables && s.max_constraints <= kMaxConstraints,
                         std::string(to_string(mode)) + " program too large");
                const auto counts = build_program(largest_scenario(site, mode == BenchMode::Windows)).counts();
                c.expect(counts.variables <= kMaxVariables && counts.constraints <= kMaxConstraints,
                         "largest " + std::string(to_string(mode)) + " program too large");
            }
            detail << to_string(mode) << " " << s.verified << "/" << s.scenarios << " verified, " << s.optimal
                   << " optimal, max " << s.max_variables << " vars/" << s.max_constraints << " cons, avg "
                   << s.avg_seconds << " s; ";
        }
        auto out = detail.str();
        if (out.size() >= 2) out.resize(out.size() - 2);
        return out;
    });

    run("narrative loop", [](Check &c) {
        const auto kb = TaskKnowledgeBase::from_instance(fixtures::case_study());
        auto corpus = generate_corpus(kb, kCorpusSeed, 5, 100);
        c.expect(corpus.size() == 500, "corpus size");
        for (auto &r : corpus) r.predicted = rule_parse(r.narrative, kb);
        const auto m = evaluate(corpus);
        c.expect(m.correct_rate == 1.0, "correct_rate " + std::to_string(m.correct_rate));

        const auto doc = Json::parse(read_file(fixtures::test_data("hand_scored.json")));
        const auto &exp = doc["expected"];
        const auto h = evaluate(corpus_from_json(doc));
        const double ca = exp["constraint_accuracy_num"].get<double>() / exp["constraint_accuracy_den"].get<double>();
        c.expect(std::abs(h.constraint_accuracy - ca) < 1e-12, "hand-scored constraint accuracy");
        c.expect(std::abs(h.parameter_accuracy - exp["parameter_accuracy"].get<double>()) < 1e-12,
                 "hand-scored parameter accuracy");
        c.expect(std::abs(h.correct_rate - exp["correct_rate"].get<double>()) < 1e-12, "hand-scored correct rate");

        const auto examples = fixtures::worked_examples();
        c.expect(examples.size() == 3, "worked example count");
        for (const auto &ex : examples) {
            c.expect(rule_parse(ex.input, kb) == parse_deltas_lenient(ex.output).deltas, "worked example: " + ex.input);
        }
        std::ostringstream d;
        d << "corpus correct_rate " << m.correct_rate << ", hand-scored " << h.constraint_accuracy << "/"
          << h.parameter_accuracy << "/" << h.correct_rate << ", " << examples.size() << " worked examples";
        return d.str();
    });

    return failures == 0 ? 0 : 1;
}
