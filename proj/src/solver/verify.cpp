#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "forecrew/solver.hpp"

namespace forecrew {

std::string_view to_string(PlanFamily family) noexcept {
    switch (family) {
    case PlanFamily::Assignment: return "Assignment";
    case PlanFamily::Bounds: return "Bounds";
    case PlanFamily::Linking: return "Linking";
    case PlanFamily::Dependency: return "Dependency";
    case PlanFamily::Capability: return "Capability";
    case PlanFamily::NoOverlap: return "NoOverlap";
    case PlanFamily::Window: return "Window";
    case PlanFamily::Conflict: return "Conflict";
    }
    return "Family";
}

bool PlanReport::contains(PlanFamily family, const std::vector<std::string> &subjects) const {
    std::multiset<std::string> want(subjects.begin(), subjects.end());
    return std::any_of(violations.begin(), violations.end(), [&](const PlanViolation &v) {
        if (v.family != family) return false;
        if (subjects.empty()) return true;
        return std::multiset<std::string>(v.subjects.begin(), v.subjects.end()) == want;
    });
}

std::string PlanReport::summary() const {
    std::ostringstream os;
    for (const auto &v : violations) os << to_string(v.family) << ": " << v.message << '\n';
    return os.str();
}

std::int64_t base_objective(const ProblemInstance &instance, const Plan &plan) {
    std::int64_t sum_end = 0, units = 0;
    Minutes makespan = 0;
    for (const auto &a : plan.tasks) {
        sum_end += a.end;
        units += static_cast<std::int64_t>(a.robots.size());
        makespan = std::max(makespan, a.end);
    }
    const auto &w = instance.weights;
    return w.makespan * makespan + w.completion * sum_end + w.robots * units;
}

PlanReport verify_plan(const ProblemInstance &instance, const Plan &plan) {
    PlanReport report;
    auto add = [&](PlanFamily f, std::vector<std::string> subjects, std::string msg) {
        report.violations.push_back({f, std::move(subjects), std::move(msg)});
    };
    const auto units = instance.expand_units();
    std::map<std::string, const RobotUnit *> unit_by_id;
    for (const auto &u : units) unit_by_id[u.id] = &u;

    std::map<std::string, const TaskAssignment *> by_task;
    for (const auto &a : plan.tasks) {
        if (!instance.task_index(a.task)) {
            add(PlanFamily::Assignment, {a.task}, "plan schedules unknown task " + a.task);
            continue;
        }
        if (!by_task.emplace(a.task, &a).second) {
            add(PlanFamily::Assignment, {a.task}, "task " + a.task + " is scheduled twice");
        }
        std::set<std::string> seen;
        for (const auto &r : a.robots) {
            if (!unit_by_id.count(r)) add(PlanFamily::Assignment, {a.task, r}, "task " + a.task + " uses unknown robot " + r);
            if (!seen.insert(r).second) add(PlanFamily::Assignment, {a.task, r}, "robot " + r + " listed twice on " + a.task);
        }
    }
    for (const auto &t : instance.tasks) {
        if (!by_task.count(t.id)) add(PlanFamily::Assignment, {t.id}, "task " + t.id + " is not scheduled");
    }
    Minutes makespan = 0;
    for (const auto &a : plan.tasks) makespan = std::max(makespan, a.end);
    if (!plan.tasks.empty() && plan.makespan != makespan) {
        add(PlanFamily::Linking, {}, "reported makespan " + std::to_string(plan.makespan) + " != max end " +
                                         std::to_string(makespan));
    }

    for (const auto &t : instance.tasks) {
        auto it = by_task.find(t.id);
        if (it == by_task.end()) continue;
        const auto &a = *it->second;
        if (a.start < 0) {
            add(PlanFamily::Bounds, {t.id}, "t^s(" + t.id + ") = " + std::to_string(a.start) + " < 0");
        }
        if (instance.horizon && a.end > *instance.horizon) {
            add(PlanFamily::Bounds, {t.id}, "t^e(" + t.id + ") = " + std::to_string(a.end) + " > T_large = " +
                                                std::to_string(*instance.horizon));
        }
        if (a.end - a.start != t.duration) {
            add(PlanFamily::Linking, {t.id}, "t^e(" + t.id + ") - t^s(" + t.id + ") = " + std::to_string(a.end - a.start) +
                                                 " != duration " + std::to_string(t.duration));
        }
        // Capability coverage.
        const bool none_required =
            std::all_of(t.requirements.begin(), t.requirements.end(), [](int b) { return b <= 0; });
        if (a.robots.empty() && none_required) {
            add(PlanFamily::Capability, {t.id}, "task " + t.id + " has no robot assigned");
        }
        for (std::size_t k = 0; k < t.requirements.size(); ++k) {
            long long supply = 0;
            for (const auto &r : a.robots) {
                auto u = unit_by_id.find(r);
                if (u != unit_by_id.end()) supply += instance.robot_types[u->second->type].capabilities[k];
            }
            if (supply < t.requirements[k]) {
                add(PlanFamily::Capability, {t.id, instance.capabilities[k].name},
                    "sum a[" + instance.capabilities[k].name + "] x for " + t.id + " = " + std::to_string(supply) + " < " +
                        std::to_string(t.requirements[k]));
            }
        }
        for (const auto &p : t.predecessors) {
            auto pit = by_task.find(p);
            if (pit == by_task.end()) continue;
            if (a.start < pit->second->end) {
                add(PlanFamily::Dependency, {p, t.id}, "t^s(" + t.id + ") = " + std::to_string(a.start) + " < t^e(" + p +
                                                           ") = " + std::to_string(pit->second->end));
            }
        }
        if (t.window) {
            if (a.start < t.window->earliest_start) {
                add(PlanFamily::Window, {t.id}, "t^s(" + t.id + ") = " + std::to_string(a.start) + " < window start " +
                                                    std::to_string(t.window->earliest_start));
            }
            if (t.window->latest_end && a.end > *t.window->latest_end) {
                add(PlanFamily::Window, {t.id}, "t^e(" + t.id + ") = " + std::to_string(a.end) + " > window end " +
                                                    std::to_string(*t.window->latest_end));
            }
        }
    }
    // One task at a time per robot.
    std::map<std::string, std::vector<const TaskAssignment *>> per_robot;
    for (const auto &a : plan.tasks) {
        for (const auto &r : a.robots) per_robot[r].push_back(&a);
    }
    for (auto &[r, list] : per_robot) {
        for (std::size_t x = 0; x < list.size(); ++x) {
            for (std::size_t y = x + 1; y < list.size(); ++y) {
                const auto *p = list[x];
                const auto *q = list[y];
                if (p->start < q->end && q->start < p->end) {
                    add(PlanFamily::NoOverlap, {p->task, q->task},
                        "robot " + r + " runs " + p->task + " [" + std::to_string(p->start) + ", " + std::to_string(p->end) +
                            ") and " + q->task + " [" + std::to_string(q->start) + ", " + std::to_string(q->end) + ")");
                }
            }
        }
    }
    for (const auto &[x, y] : instance.conflicts) {
        auto p = by_task.find(x);
        auto q = by_task.find(y);
        if (p == by_task.end() || q == by_task.end()) continue;
        if (p->second->start < q->second->end && q->second->start < p->second->end) {
            add(PlanFamily::Conflict, {x, y}, "tasks " + x + " and " + y + " run concurrently");
        }
    }
    return report;
}

} // namespace forecrew
