#include "doctest.h"

#include <random>

#include "forecrew/replanner.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace forecrew;

namespace {

bool contains(const std::vector<std::string> &v, const std::string &x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

const TaskAssignment &at(const Plan &p, const std::string &id) { return *p.find(id); }

} // namespace

TEST_SUITE("replanner") {

TEST_CASE("split follows the start boundary") {
    const auto plan = fixtures::reference_plan();

    SUBCASE("tasks started at or before T^R are frozen") {
        const auto split = split_tasks(plan, 12);
        for (const auto &a : plan.tasks) {
            CAPTURE(a.task);
            CHECK(contains(split.past, a.task) == (a.start <= 12));
            CHECK(contains(split.future, a.task) == (a.start > 12));
        }
        CHECK(contains(split.past, "T1"));
        CHECK(contains(split.past, "T2"));
    }
    SUBCASE("T^R = 0 freezes exactly the tasks starting at 0") {
        const auto split = split_tasks(plan, 0);
        for (const auto &id : split.past) CHECK(at(plan, id).start == 0);
        CHECK(split.past.size() + split.future.size() == plan.tasks.size());
    }
    SUBCASE("after the makespan nothing is left") {
        CHECK(split_tasks(plan, plan.makespan + 1).future.empty());
    }
}

TEST_CASE("delayed duct materials swap T4 and T5 on one R1 unit") {
    const auto original = fixtures::reference_plan();
    const auto updated = apply_deltas(fixtures::case_study(), {StartTimeChange{"T4", 30}});
    const auto result = replan(ReplanContext{updated, original, 12});
    REQUIRE(result.plan.status == SolveStatus::Optimal);
    CHECK(verify_plan(updated, result.plan).ok());

    for (const auto &id : result.split.past) CHECK(at(result.plan, id) == at(original, id));

    const auto &t4 = at(result.plan, "T4");
    const auto &t5 = at(result.plan, "T5");
    CHECK(t4.robots == t5.robots);
    CHECK(t4.robots.size() == 1);
    CHECK(t5.end <= t4.start);
    CHECK(at(original, "T4").end <= at(original, "T5").start);
    CHECK(result.delta.retiming > 0);
}

TEST_CASE("without changes the replan keeps the plan") {
    const auto inst = fixtures::case_study();
    const auto original = fixtures::reference_plan();
    for (Minutes t_r : {0, 12, 100}) {
        CAPTURE(t_r);
        const auto result = replan(ReplanContext{inst, original, t_r});
        CHECK(result.delta.reassignments == 0);
        CHECK(result.delta.retiming == 0);
        CHECK(result.plan.same_schedule(original));
    }
}

TEST_CASE("single future task with a longer duration keeps robot and start") {
    ProblemInstance inst;
    inst.capabilities = {{0, "lift"}};
    inst.robot_types.push_back({"A", {1}, 2});
    Task t;
    t.id = "X";
    t.duration = 20;
    t.requirements = {1};
    t.window = TimeWindow{10, std::nullopt};
    inst.tasks.push_back(t);
    const auto original = solve_instance(inst).first;
    const auto updated = apply_deltas(inst, {DurationChange{"X", 40}});
    const auto result = replan(ReplanContext{updated, original, 5});
    const auto ref = oracle::replan(updated, original, 5);
    REQUIRE(ref.feasible);
    CHECK(result.plan.objective == ref.objective);
    CHECK(at(result.plan, "X").robots == at(original, "X").robots);
    CHECK(at(result.plan, "X").start == at(original, "X").start);
    CHECK(at(result.plan, "X").end == at(original, "X").start + 40);
}

TEST_CASE("plan_delta arithmetic") {
    Plan a;
    a.tasks = {{"X", 0, 10, {"A#0"}}, {"Y", 10, 20, {"A#0"}}};
    SUBCASE("identical plans") { CHECK(plan_delta(a, a, {"X", "Y"}) == PlanDelta{0, 0}); }
    SUBCASE("moved by ten minutes") {
        auto b = a;
        b.tasks[1].start += 10;
        b.tasks[1].end += 10;
        CHECK(plan_delta(a, b, {"Y"}) == PlanDelta{0, 20});
    }
    SUBCASE("moved to another unit") {
        auto b = a;
        b.tasks[1].robots = {"A#1"};
        CHECK(plan_delta(a, b, {"Y"}) == PlanDelta{2, 0});
    }
    SUBCASE("different task sets") {
        auto b = a;
        b.tasks.pop_back();
        CHECK_THROWS_AS(plan_delta(a, b, {"X"}), Error);
    }
}

TEST_CASE("changing a started task is FrozenInfeasible") {
    const auto original = fixtures::reference_plan();
    const auto updated = apply_deltas(fixtures::case_study(), {DurationChange{"T1", 45}});
    try {
        (void)replan(ReplanContext{updated, original, 12});
        FAIL("expected FrozenInfeasible");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::FrozenInfeasible);
    }
}

TEST_CASE("replan objective matches enumeration with pinned history") {
    int checked = 0;
    for (int seed = 0; seed < 60; ++seed) {
        std::mt19937 rng(static_cast<unsigned>(1000 + seed));
        const auto inst = oracle::random_instance(rng, 2 + seed % 3, seed % 2 == 1);
        if (!validate_instance(inst).ok()) continue;
        const auto [plan, stats] = solve_instance(inst);
        if (plan.status != SolveStatus::Optimal) continue;
        const Minutes t_r = std::uniform_int_distribution<int>(0, static_cast<int>(plan.makespan))(rng);
        const auto &victim = inst.tasks[static_cast<std::size_t>(seed) % inst.tasks.size()].id;
        std::vector<ConstraintDelta> deltas;
        if (seed % 3 == 0) deltas.push_back(StartTimeChange{victim, 2});
        if (seed % 3 == 1) deltas.push_back(DurationChange{victim, 1 + seed % 4});
        const auto updated = apply_deltas(inst, deltas);
        if (!validate_instance(updated).ok()) continue;
        CAPTURE(seed);
        const auto ref = oracle::replan(updated, plan, t_r);
        try {
            const auto result = replan(ReplanContext{updated, plan, t_r});
            if (!ref.feasible) {
                CHECK(result.plan.status == SolveStatus::Infeasible);
                continue;
            }
            REQUIRE(result.plan.status == SolveStatus::Optimal);
            CHECK(result.plan.objective == ref.objective);
            CHECK(verify_plan(updated, result.plan).ok());
            for (const auto &id : result.split.past) CHECK(at(result.plan, id) == at(plan, id));
            ++checked;
        } catch (const Error &e) {
            CHECK(e.code() == ErrorCode::FrozenInfeasible);
            CHECK_FALSE(ref.feasible);
        }
    }
    CHECK(checked >= 20);
}

} // TEST_SUITE
