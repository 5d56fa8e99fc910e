#include "forecrew/program.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace forecrew {

std::string_view to_string(Family family) noexcept {
    switch (family) {
    case Family::Linking: return "Linking";
    case Family::Dependency: return "Dependency";
    case Family::Capability: return "Capability";
    case Family::NoOverlap: return "NoOverlap";
    case Family::Window: return "Window";
    case Family::Conflict: return "Conflict";
    case Family::Frozen: return "Frozen";
    case Family::Penalty: return "Penalty";
    }
    return "Family";
}

ProgramCounts IntegerProgram::counts() const {
    ProgramCounts c;
    c.variables = variables.size();
    c.constraints = constraints.size() + no_overlap.size();
    std::size_t pairs = 0;
    for (const auto &g : no_overlap) {
        pairs += g.tasks.size() * (g.tasks.size() - 1) / 2;
    }
    c.expanded_variables = c.variables + pairs;
    c.expanded_constraints = constraints.size() + 2 * pairs;
    for (const auto &row : constraints) {
        ++c.constraints_by_family[std::string(to_string(row.family))];
    }
    if (!no_overlap.empty()) {
        c.constraints_by_family[std::string(to_string(Family::NoOverlap))] += no_overlap.size();
    }
    return c;
}

std::vector<TypeTeam> minimal_teams(const ProblemInstance &instance, const Task &task) {
    const std::size_t n_types = instance.robot_types.size();
    const std::size_t n_caps = task.requirements.size();
    std::vector<TypeTeam> out;
    const bool no_requirement =
        std::all_of(task.requirements.begin(), task.requirements.end(), [](int b) { return b <= 0; });
    if (no_requirement) {
        for (std::size_t t = 0; t < n_types; ++t) {
            if (instance.robot_types[t].count > 0) {
                TypeTeam team{std::vector<int>(n_types, 0), 1};
                team.per_type[t] = 1;
                out.push_back(std::move(team));
            }
        }
        return out;
    }
    auto amount = [&](std::size_t t, std::size_t k) {
        const auto &caps = instance.robot_types[t].capabilities;
        return k < caps.size() ? caps[k] : 0;
    };
    std::vector<int> cap(n_types, 0);
    for (std::size_t t = 0; t < n_types; ++t) {
        int need = 0;
        for (std::size_t k = 0; k < n_caps; ++k) {
            if (task.requirements[k] > 0 && amount(t, k) > 0) {
                need = std::max(need, (task.requirements[k] + amount(t, k) - 1) / amount(t, k));
            }
        }
        cap[t] = std::min(need, std::max(0, instance.robot_types[t].count));
    }
    auto covers = [&](const std::vector<int> &q) {
        for (std::size_t k = 0; k < n_caps; ++k) {
            long long s = 0;
            for (std::size_t t = 0; t < n_types; ++t) {
                s += static_cast<long long>(q[t]) * amount(t, k);
            }
            if (s < task.requirements[k]) return false;
        }
        return true;
    };
    std::vector<int> q(n_types, 0);
    std::function<void(std::size_t)> rec = [&](std::size_t t) {
        if (t == n_types) {
            if (!covers(q)) return;
            for (std::size_t u = 0; u < n_types; ++u) {
                if (q[u] > 0) {
                    --q[u];
                    const bool still = covers(q);
                    ++q[u];
                    if (still) return;
                }
            }
            int size = 0;
            for (int v : q) size += v;
            out.push_back({q, size});
            return;
        }
        for (int v = 0; v <= cap[t]; ++v) {
            q[t] = v;
            rec(t + 1);
        }
        q[t] = 0;
    };
    rec(0);
    std::stable_sort(out.begin(), out.end(), [](const TypeTeam &a, const TypeTeam &b) { return a.size < b.size; });
    return out;
}

namespace {

std::size_t add_var(IntegerProgram &p, std::string name, VarKind kind, VarRole role, Minutes lo, Minutes hi) {
    p.variables.push_back({std::move(name), kind, role, lo, hi});
    return p.variables.size() - 1;
}

void add_row(IntegerProgram &p, Family family, std::vector<Term> terms, Sense sense, std::int64_t rhs,
             std::string label, std::optional<std::size_t> indicator = std::nullopt) {
    p.constraints.push_back({family, std::move(terms), sense, rhs, indicator, std::move(label)});
}

struct Layout {
    std::vector<std::size_t> start, end;
    // Per task: (unit, x var, robot start var, robot end var).
    struct Pair {
        std::size_t unit, x, ts, te;
    };
    std::vector<std::vector<Pair>> pairs;
};

void check_admissible(const ProblemInstance &instance) {
    auto report = validate_instance(instance);
    if (!report.ok()) {
        throw Error(ErrorCode::InstanceInvalid, report.summary());
    }
    int units = 0;
    for (const auto &rt : instance.robot_types) units += rt.count;
    if (units > 64) {
        throw Error(ErrorCode::InstanceInvalid, "at most 64 robot units are supported, got " + std::to_string(units));
    }
}

Layout build_core(IntegerProgram &p, const ProblemInstance &instance, Minutes horizon) {
    p.instance = instance;
    p.units = instance.expand_units();
    p.horizon = horizon;
    const std::size_t n = instance.tasks.size();
    const Minutes M = horizon;
    const auto &w = instance.weights;
    Layout L;
    L.pairs.resize(n);
    p.teams.resize(n);
    p.qualified.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        p.teams[i] = minimal_teams(instance, t);
        std::set<std::size_t> types;
        for (const auto &team : p.teams[i]) {
            for (std::size_t ty = 0; ty < team.per_type.size(); ++ty) {
                if (team.per_type[ty] > 0) types.insert(ty);
            }
        }
        for (std::size_t u = 0; u < p.units.size(); ++u) {
            if (types.count(p.units[u].type)) p.qualified[i].push_back(u);
        }
        L.start.push_back(add_var(p, "ts[" + t.id + "]", VarKind::Integer, VarRole::TaskStart, 0, M));
        L.end.push_back(add_var(p, "te[" + t.id + "]", VarKind::Integer, VarRole::TaskEnd, 0, M));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        for (auto u : p.qualified[i]) {
            const std::string key = t.id + "," + p.units[u].id;
            Layout::Pair pr{u, 0, 0, 0};
            pr.x = add_var(p, "x[" + key + "]", VarKind::Binary, VarRole::Assign, 0, 1);
            pr.ts = add_var(p, "ts[" + key + "]", VarKind::Integer, VarRole::RobotStart, 0, M);
            pr.te = add_var(p, "te[" + key + "]", VarKind::Integer, VarRole::RobotEnd, 0, M);
            L.pairs[i].push_back(pr);
        }
    }

    // Duration link and robot/task time linking.
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        add_row(p, Family::Linking, {{L.end[i], 1}, {L.start[i], -1}}, Sense::Equal, t.duration, "duration " + t.id);
        for (const auto &pr : L.pairs[i]) {
            const std::string key = t.id + "," + p.units[pr.unit].id;
            add_row(p, Family::Linking, {{pr.ts, 1}, {L.start[i], -1}}, Sense::Equal, 0, "start link " + key, pr.x);
            add_row(p, Family::Linking, {{pr.te, 1}, {L.end[i], -1}}, Sense::Equal, 0, "end link " + key, pr.x);
        }
    }
    // Capability coverage.
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        bool any = false;
        for (std::size_t k = 0; k < t.requirements.size(); ++k) {
            if (t.requirements[k] <= 0) continue;
            any = true;
            std::vector<Term> terms;
            for (const auto &pr : L.pairs[i]) {
                const int a = instance.robot_types[p.units[pr.unit].type].capabilities[k];
                if (a > 0) terms.push_back({pr.x, a});
            }
            add_row(p, Family::Capability, std::move(terms), Sense::GreaterEqual, t.requirements[k],
                    "capability " + t.id + "/" + instance.capabilities[k].name);
        }
        if (!any) {
            std::vector<Term> terms;
            for (const auto &pr : L.pairs[i]) terms.push_back({pr.x, 1});
            add_row(p, Family::Capability, std::move(terms), Sense::GreaterEqual, 1, "staffed " + t.id);
        }
    }
    // Dependencies.
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        for (const auto &pred : t.predecessors) {
            const auto j = *instance.task_index(pred);
            add_row(p, Family::Dependency, {{L.start[i], 1}, {L.end[j], -1}}, Sense::GreaterEqual, 0,
                    "dependency " + pred + " -> " + t.id);
        }
    }
    // Windows.
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        if (!t.window) continue;
        add_row(p, Family::Window, {{L.start[i], 1}}, Sense::GreaterEqual, t.window->earliest_start,
                "window start " + t.id);
        if (t.window->latest_end) {
            add_row(p, Family::Window, {{L.end[i], 1}}, Sense::LessEqual, *t.window->latest_end, "window end " + t.id);
        }
    }
    // Robot no-overlap.
    for (std::size_t u = 0; u < p.units.size(); ++u) {
        NoOverlapGroup g{u, {}};
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(p.qualified[i].begin(), p.qualified[i].end(), u) != p.qualified[i].end()) {
                g.tasks.push_back(i);
            }
        }
        if (g.tasks.size() >= 2) p.no_overlap.push_back(std::move(g));
    }
    // Conflicts: y = 1 orders the first task before the second.
    for (const auto &[a, b] : instance.conflicts) {
        const auto i = *instance.task_index(a);
        const auto j = *instance.task_index(b);
        const auto y = add_var(p, "y[" + a + "," + b + "]", VarKind::Binary, VarRole::ConflictOrder, 0, 1);
        add_row(p, Family::Conflict, {{L.start[j], 1}, {L.end[i], -1}, {y, -M}}, Sense::GreaterEqual, -M,
                "conflict " + a + " before " + b);
        add_row(p, Family::Conflict, {{L.start[i], 1}, {L.end[j], -1}, {y, M}}, Sense::GreaterEqual, 0,
                "conflict " + b + " before " + a);
    }
    // Objective.
    for (std::size_t i = 0; i < n; ++i) {
        p.makespan_over.push_back(L.end[i]);
        if (w.completion != 0) p.objective.push_back({L.end[i], w.completion});
        for (const auto &pr : L.pairs[i]) {
            if (w.robots != 0) p.objective.push_back({pr.x, w.robots});
        }
    }
    return L;
}

} // namespace

IntegerProgram build_program(const ProblemInstance &instance) {
    check_admissible(instance);
    IntegerProgram p;
    build_core(p, instance, instance.effective_horizon());
    return p;
}

IntegerProgram build_replan_program(const ProblemInstance &instance, const Plan &original, Minutes replan_time) {
    check_admissible(instance);
    const std::size_t n = instance.tasks.size();
    {
        std::set<std::string> plan_ids, inst_ids;
        for (const auto &a : original.tasks) plan_ids.insert(a.task);
        for (const auto &t : instance.tasks) inst_ids.insert(t.id);
        if (plan_ids != inst_ids || original.tasks.size() != n) {
            throw Error(ErrorCode::TaskSetMismatch, "original plan and instance cover different tasks");
        }
    }
    if (replan_time < 0) {
        throw Error(ErrorCode::InvalidDelta, "replanning time must be non-negative");
    }
    Minutes total = 0;
    for (const auto &t : instance.tasks) total += t.duration;
    Minutes horizon = instance.effective_horizon();
    if (!instance.horizon) {
        Minutes anchor = replan_time;
        for (const auto &a : original.tasks) anchor = std::max(anchor, a.start);
        horizon = std::max(horizon, anchor + total + 1);
    }

    IntegerProgram p;
    Layout L = build_core(p, instance, horizon);
    ReplanData data;
    data.replan_time = replan_time;
    data.original = original;
    data.frozen.assign(n, false);

    std::vector<const TaskAssignment *> orig(n);
    for (std::size_t i = 0; i < n; ++i) {
        orig[i] = original.find(instance.tasks[i].id);
        data.frozen[i] = orig[i]->start <= replan_time;
    }
    auto unit_index = [&](const std::string &id) -> std::optional<std::size_t> {
        for (std::size_t u = 0; u < p.units.size(); ++u) {
            if (p.units[u].id == id) return u;
        }
        return std::nullopt;
    };
    auto frozen_fail = [](const std::string &msg) { throw Error(ErrorCode::FrozenInfeasible, msg); };

    // History must still satisfy the updated instance.
    for (std::size_t i = 0; i < n; ++i) {
        if (!data.frozen[i]) continue;
        const auto &t = instance.tasks[i];
        const auto &a = *orig[i];
        if (a.end - a.start != t.duration) {
            frozen_fail("task " + t.id + " already started with duration " + std::to_string(a.end - a.start) +
                        " min, updated duration is " + std::to_string(t.duration) + " min");
        }
        if (t.window) {
            if (a.start < t.window->earliest_start) {
                frozen_fail("task " + t.id + " started at " + std::to_string(a.start) + " before its window start " +
                            std::to_string(t.window->earliest_start));
            }
            if (t.window->latest_end && a.end > *t.window->latest_end) {
                frozen_fail("task " + t.id + " ends after its window");
            }
        }
        std::vector<int> supply(t.requirements.size(), 0);
        for (const auto &r : a.robots) {
            auto u = unit_index(r);
            if (!u) frozen_fail("robot " + r + " serving started task " + t.id + " is no longer available");
            const auto &caps = instance.robot_types[p.units[*u].type].capabilities;
            for (std::size_t k = 0; k < supply.size(); ++k) supply[k] += caps[k];
        }
        for (std::size_t k = 0; k < supply.size(); ++k) {
            if (supply[k] < t.requirements[k]) frozen_fail("team of started task " + t.id + " no longer qualifies");
        }
        for (const auto &pred : t.predecessors) {
            const auto j = *instance.task_index(pred);
            if (!data.frozen[j]) {
                frozen_fail("started task " + t.id + " cannot depend on unstarted task " + pred);
            }
            if (orig[j]->end > a.start) {
                frozen_fail("started task " + t.id + " began before its predecessor " + pred + " ended");
            }
        }
    }
    for (const auto &[x, y] : instance.conflicts) {
        const auto i = *instance.task_index(x);
        const auto j = *instance.task_index(y);
        if (data.frozen[i] && data.frozen[j] && orig[i]->start < orig[j]->end && orig[j]->start < orig[i]->end) {
            frozen_fail("started tasks " + x + " and " + y + " overlap but may not run concurrently");
        }
    }

    const auto &w = instance.weights;
    for (std::size_t i = 0; i < n; ++i) {
        const auto &t = instance.tasks[i];
        const auto &a = *orig[i];
        if (data.frozen[i]) {
            add_row(p, Family::Frozen, {{L.start[i], 1}}, Sense::Equal, a.start, "frozen start " + t.id);
            for (const auto &pr : L.pairs[i]) {
                const bool used =
                    std::find(a.robots.begin(), a.robots.end(), p.units[pr.unit].id) != a.robots.end();
                p.variables[pr.x].lower = p.variables[pr.x].upper = used ? 1 : 0;
            }
            continue;
        }
        add_row(p, Family::Frozen, {{L.start[i], 1}}, Sense::GreaterEqual, replan_time, "not before replan " + t.id);
        auto deviation = [&](std::size_t var, Minutes target, const std::string &what) {
            const auto plus = add_var(p, what + "+[" + t.id + "]", VarKind::Integer, VarRole::DeviationPlus, 0, horizon);
            const auto minus =
                add_var(p, what + "-[" + t.id + "]", VarKind::Integer, VarRole::DeviationMinus, 0, horizon);
            add_row(p, Family::Penalty, {{var, 1}, {plus, -1}, {minus, 1}}, Sense::Equal, target,
                    what + " deviation " + t.id);
            if (w.retiming != 0) {
                p.objective.push_back({plus, w.retiming});
                p.objective.push_back({minus, w.retiming});
            }
        };
        deviation(L.start[i], a.start, "ds");
        deviation(L.end[i], a.end, "de");
        // |x - x0| is x when x0 = 0 and 1 - x when x0 = 1.
        for (const auto &pr : L.pairs[i]) {
            const bool used = std::find(a.robots.begin(), a.robots.end(), p.units[pr.unit].id) != a.robots.end();
            if (w.reassignment == 0) continue;
            if (used) {
                p.objective.push_back({pr.x, -w.reassignment});
                p.objective_constant += w.reassignment;
            } else {
                p.objective.push_back({pr.x, w.reassignment});
            }
        }
        for (const auto &r : a.robots) {
            auto u = unit_index(r);
            const bool qualified =
                u && std::find(p.qualified[i].begin(), p.qualified[i].end(), *u) != p.qualified[i].end();
            if (!qualified) p.objective_constant += w.reassignment;
        }
    }
    p.replan = std::move(data);
    return p;
}

} // namespace forecrew
