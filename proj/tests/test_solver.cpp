#include "doctest.h"

#include <random>

#include "forecrew/program.hpp"
#include "forecrew/solver.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace forecrew;

namespace {

ProblemInstance one_type(int units, std::vector<std::pair<std::string, Minutes>> tasks,
                         std::vector<std::pair<std::string, std::string>> deps = {}) {
    ProblemInstance inst;
    inst.capabilities = {{0, "lift"}};
    inst.robot_types.push_back({"A", {1}, units});
    for (auto &[id, d] : tasks) {
        Task t;
        t.id = id;
        t.duration = d;
        t.requirements = {1};
        inst.tasks.push_back(t);
    }
    for (auto &[a, b] : deps) inst.tasks[*inst.task_index(b)].predecessors.push_back(a);
    return inst;
}

std::size_t count_role(const IntegerProgram &p, VarRole role) {
    std::size_t n = 0;
    for (const auto &v : p.variables) n += v.role == role;
    return n;
}

} // namespace

TEST_SUITE("solver") {

TEST_CASE("case study optimum") {
    const auto inst = fixtures::case_study();
    const auto [plan, stats] = solve_instance(inst);
    CHECK(plan.status == SolveStatus::Optimal);
    CHECK(plan.makespan == 315);
    CHECK(verify_plan(inst, plan).ok());
    CHECK(base_objective(inst, plan) == plan.objective);
    CHECK(stats.seconds < 120.0);
}

TEST_CASE("the reference plan is an optimum of the case study") {
    const auto inst = fixtures::case_study();
    const auto ref = fixtures::reference_plan();
    CHECK(verify_plan(inst, ref).ok());
    const auto [plan, stats] = solve_instance(inst);
    CHECK(base_objective(inst, ref) == plan.objective);
}

TEST_CASE("empty task set gives an empty plan") {
    const auto [plan, stats] = solve_instance(one_type(1, {}));
    CHECK(plan.status == SolveStatus::Optimal);
    CHECK(plan.tasks.empty());
    CHECK(plan.makespan == 0);
}

TEST_CASE("a chain on one robot runs back to back") {
    const auto inst = one_type(1, {{"A1", 30}, {"B1", 60}}, {{"A1", "B1"}});
    const auto [plan, stats] = solve_instance(inst);
    REQUIRE(plan.status == SolveStatus::Optimal);
    CHECK(plan.find("A1")->start == 0);
    CHECK(plan.find("A1")->end == 30);
    CHECK(plan.find("B1")->start == 30);
    CHECK(plan.find("B1")->end == 90);
    CHECK(plan.makespan == 90);
}

TEST_CASE("three equal tasks on two robots agree with enumeration") {
    const auto inst = one_type(2, {{"P", 60}, {"Q", 60}, {"R", 60}});
    bool feasible = false;
    const auto ref = oracle::solve_active(inst, &feasible);
    REQUIRE(feasible);
    const auto [plan, stats] = solve_instance(inst);
    CHECK(plan.objective == ref);
    CHECK(plan.makespan == 120);
}

TEST_CASE("program shapes") {
    SUBCASE("one task and one qualified robot") {
        const auto p = build_program(one_type(1, {{"X", 10}}));
        CHECK(count_role(p, VarRole::Assign) == 1);
        CHECK(p.counts().expanded_variables == p.counts().variables);
    }
    SUBCASE("two conflicting tasks") {
        auto inst = one_type(2, {{"X", 10}, {"Y", 10}});
        inst.conflicts.emplace_back("X", "Y");
        const auto p = build_program(inst);
        CHECK(count_role(p, VarRole::ConflictOrder) == 1);
        CHECK(p.counts().constraints_by_family.at("Conflict") == 2);
    }
    SUBCASE("invalid instances are rejected") {
        auto inst = one_type(0, {{"X", 10}});
        CHECK_THROWS_AS(build_program(inst), Error);
    }
}

TEST_CASE("zero budgets are rejected") {
    SolveLimits limits;
    limits.time_seconds = 0;
    CHECK_THROWS_AS(solve_instance(one_type(1, {{"X", 10}}), limits), Error);
}

TEST_CASE("an impossible window is reported as Infeasible") {
    auto inst = one_type(1, {{"X", 30}, {"Y", 30}});
    inst.tasks[0].window = TimeWindow{0, 30};
    inst.tasks[1].window = TimeWindow{0, 30};
    const auto [plan, stats] = solve_instance(inst);
    CHECK(plan.status == SolveStatus::Infeasible);
}

TEST_CASE("verify_plan names the violated family") {
    const auto inst = one_type(1, {{"X", 30}, {"Y", 30}});
    Plan plan;
    plan.tasks = {{"X", 0, 30, {"A#0"}}, {"Y", 10, 40, {"A#0"}}};
    plan.makespan = 40;
    CHECK(verify_plan(inst, plan).contains(PlanFamily::NoOverlap, {"X", "Y"}));

    auto two = fixtures::case_study();
    auto ref = fixtures::reference_plan();
    for (auto &a : ref.tasks) {
        if (a.task == "T7") a.robots = {"R6#0"};
    }
    const auto report = verify_plan(two, ref);
    CHECK(report.contains(PlanFamily::Capability, {"T7", "precise parallel gripper"}));
    CHECK(report.summary().find("T7") != std::string::npos);
}

TEST_CASE("objective matches enumeration on small random instances") {
    int checked = 0;
    for (int seed = 0; seed < 80; ++seed) {
        std::mt19937 rng(static_cast<unsigned>(seed));
        const auto inst = oracle::random_instance(rng, 2 + seed % 4, seed % 2 == 1);
        if (!validate_instance(inst).ok()) continue;
        const auto [plan, stats] = solve_instance(inst);
        const auto ref = oracle::solve(inst);
        CAPTURE(seed);
        if (!ref.feasible) {
            CHECK(plan.status == SolveStatus::Infeasible);
            continue;
        }
        REQUIRE(plan.status == SolveStatus::Optimal);
        CHECK(plan.objective == ref.objective);
        CHECK(verify_plan(inst, plan).ok());
        ++checked;
    }
    CHECK(checked > 40);
}

TEST_CASE("adding a dependency never shortens the optimum") {
    const auto base = one_type(2, {{"P", 20}, {"Q", 30}, {"R", 10}});
    auto more = base;
    more.tasks[2].predecessors = {"Q"};
    const auto a = solve_instance(base).first.makespan;
    const auto b = solve_instance(more).first.makespan;
    CHECK(b >= a);
}

} // TEST_SUITE
