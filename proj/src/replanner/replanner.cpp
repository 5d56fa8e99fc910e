#include "forecrew/replanner.hpp"

#include <algorithm>
#include <set>

namespace forecrew {

TaskSplit split_tasks(const Plan &plan, Minutes t_r) {
    TaskSplit split;
    for (const auto &a : plan.tasks) {
        (a.start <= t_r ? split.past : split.future).push_back(a.task);
    }
    return split;
}

PlanDelta plan_delta(const Plan &original, const Plan &revised, const std::vector<std::string> &future) {
    std::set<std::string> a, b;
    for (const auto &t : original.tasks) a.insert(t.task);
    for (const auto &t : revised.tasks) b.insert(t.task);
    if (a != b || a.size() != original.tasks.size() || b.size() != revised.tasks.size()) {
        throw Error(ErrorCode::TaskSetMismatch, "plans cover different task sets");
    }
    PlanDelta d;
    for (const auto &id : future) {
        const auto *o = original.find(id);
        const auto *r = revised.find(id);
        if (!o || !r) throw Error(ErrorCode::TaskSetMismatch, "task " + id + " missing from a plan");
        std::set<std::string> x0(o->robots.begin(), o->robots.end());
        std::set<std::string> x1(r->robots.begin(), r->robots.end());
        for (const auto &u : x0) d.reassignments += x1.count(u) ? 0 : 1;
        for (const auto &u : x1) d.reassignments += x0.count(u) ? 0 : 1;
        d.retiming += std::abs(r->start - o->start) + std::abs(r->end - o->end);
    }
    return d;
}

ReplanResult replan(const ReplanContext &ctx, const SolveLimits &limits) {
    auto program = build_replan_program(ctx.instance, ctx.original, ctx.replan_time);
    ReplanResult result;
    result.split = split_tasks(ctx.original, ctx.replan_time);
    auto [plan, stats] = solve(program, limits);
    result.plan = std::move(plan);
    result.stats = stats;
    if (!result.plan.tasks.empty() || ctx.instance.tasks.empty()) {
        if (result.plan.status != SolveStatus::Infeasible && result.plan.status != SolveStatus::Unknown) {
            result.delta = plan_delta(ctx.original, result.plan, result.split.future);
        }
    }
    return result;
}

} // namespace forecrew
