#include "doctest.h"

#include <set>

#include "forecrew/bench.hpp"
#include "forecrew/program.hpp"
#include "support/fixtures.hpp"

using namespace forecrew;

namespace {

constexpr BenchMode kModes[] = {BenchMode::Original, BenchMode::Windows, BenchMode::Conflicts, BenchMode::Replanning};

} // namespace

TEST_SUITE("bench") {

TEST_CASE("mode names round-trip") {
    for (auto m : kModes) CHECK(parse_bench_mode(to_string(m)) == m);
    CHECK_FALSE(parse_bench_mode("fast").has_value());
}

TEST_CASE("generated scenarios respect the protocol") {
    const auto site = fixtures::site();
    std::set<std::size_t> sizes;
    for (auto mode : kModes) {
        for (std::size_t i = 0; i < 40; ++i) {
            CAPTURE(i);
            const auto sc = generate_scenario(site, mode, 42, i);
            const auto &inst = sc.instance;
            CHECK(validate_instance(inst).ok());
            sizes.insert(inst.tasks.size());
            CHECK(inst.tasks.size() >= 14);
            CHECK(inst.tasks.size() <= 27);
            for (const auto &t : inst.robot_types) {
                const auto r = robot_count_range(t.id);
                CHECK(t.count >= r.min);
                CHECK(t.count <= r.max);
            }
            for (const auto &group : task_groups()) {
                const bool first = inst.task_index(group[0] + "b").has_value();
                for (const auto &id : group) CHECK(inst.task_index(id + "b").has_value() == first);
            }
            CHECK(inst.task_index("T14b") == std::nullopt);

            std::size_t windows = 0;
            for (const auto &t : inst.tasks) {
                if (!t.window) continue;
                ++windows;
                CHECK(t.window->earliest_start >= 120);
                CHECK(t.window->earliest_start <= 240);
            }
            if (mode == BenchMode::Windows) {
                CHECK(windows >= 1);
                CHECK(windows <= 3);
            } else {
                CHECK(windows == 0);
            }

            if (mode == BenchMode::Conflicts) {
                std::size_t members = 0;
                for (const auto &id : conflict_tasks()) members += 1 + inst.task_index(id + "b").has_value();
                CHECK(inst.conflicts.size() == members * (members - 1) / 2);
            } else {
                CHECK(inst.conflicts.empty());
            }
        }
    }
    CHECK(sizes.size() > 3);
}

TEST_CASE("copies carry renamed dependencies") {
    const auto site = fixtures::site();
    for (std::size_t i = 0; i < 20; ++i) {
        const auto inst = generate_scenario(site, BenchMode::Original, 7, i).instance;
        for (const auto &t : inst.tasks) {
            if (t.id.back() != 'b') continue;
            const auto &orig = inst.tasks[*inst.task_index(t.id.substr(0, t.id.size() - 1))];
            REQUIRE(t.predecessors.size() == orig.predecessors.size());
            for (std::size_t k = 0; k < t.predecessors.size(); ++k) CHECK(t.predecessors[k] == orig.predecessors[k] + "b");
            CHECK(t.duration == orig.duration);
            CHECK(t.requirements == orig.requirements);
        }
    }
}

TEST_CASE("generation is a function of seed and index") {
    const auto site = fixtures::site();
    for (auto mode : kModes) {
        CHECK(generate_scenario(site, mode, 42, 5).instance == generate_scenario(site, mode, 42, 5).instance);
    }
    bool differs = false;
    for (std::size_t i = 0; i < 10 && !differs; ++i) {
        differs = !(generate_scenario(site, BenchMode::Original, 42, i).instance ==
                    generate_scenario(site, BenchMode::Original, 43, i).instance);
    }
    CHECK(differs);
}

TEST_CASE("replanning windows land on future tasks") {
    const auto site = fixtures::site();
    for (std::size_t i = 0; i < 5; ++i) {
        auto sc = generate_scenario(site, BenchMode::Replanning, 42, i);
        const auto base = solve_instance(sc.instance).first;
        const auto inst = add_replan_windows(sc, base, 42);
        CHECK(sc.replan_time >= 0);
        CHECK(sc.replan_time <= std::min<Minutes>(120, base.makespan));
        CHECK(!sc.windowed.empty());
        CHECK(sc.windowed.size() <= 3);
        for (const auto &id : sc.windowed) {
            CHECK(base.find(id)->start > sc.replan_time);
            CHECK(inst.tasks[*inst.task_index(id)].window.has_value());
        }
    }
}

TEST_CASE("a short run verifies and serializes deterministically") {
    BenchOptions opt;
    opt.mode = BenchMode::Windows;
    opt.scenarios = 6;
    opt.limits.time_seconds = 0.5;
    opt.workers = 2;
    const auto site = fixtures::site();
    const auto rows = run_bench(site, opt);
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(rows[i].error);
        CHECK(rows[i].index == i);
        CHECK(rows[i].verified);
        CHECK(rows[i].variables <= 345);
        CHECK(rows[i].constraints <= 379);
    }
    const auto csv = bench_csv(rows, false);
    CHECK(csv.rfind("index,mode,tasks,robots,variables,constraints,status,makespan_min,objective,verified,error\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
    CHECK(bench_csv(rows, true).find(",nodes,seconds") != std::string::npos);

    const auto s = summarize(opt.mode, rows);
    CHECK(s.verified == 6);
    CHECK(s.failures == 0);
    CHECK(summary_table({s}).find("windows") != std::string::npos);
}

} // TEST_SUITE
