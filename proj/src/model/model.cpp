#include "forecrew/model.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace forecrew {

Minutes ProblemInstance::effective_horizon() const {
    if (horizon) {
        return *horizon;
    }
    Minutes total = 0;
    Minutes latest_release = 0;
    for (const auto &t : tasks) {
        total += t.duration;
        if (t.window) {
            latest_release = std::max(latest_release, t.window->earliest_start);
        }
    }
    return total + latest_release + 1;
}

std::optional<std::size_t> ProblemInstance::task_index(std::string_view id) const {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> ProblemInstance::robot_type_index(std::string_view id) const {
    for (std::size_t i = 0; i < robot_types.size(); ++i) {
        if (robot_types[i].id == id) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> ProblemInstance::capability_index(std::string_view name) const {
    for (std::size_t i = 0; i < capabilities.size(); ++i) {
        if (capabilities[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::string unit_id(std::string_view type_id, int ordinal) {
    return std::string(type_id) + "#" + std::to_string(ordinal);
}

std::vector<RobotUnit> ProblemInstance::expand_units() const {
    std::vector<RobotUnit> units;
    for (std::size_t t = 0; t < robot_types.size(); ++t) {
        for (int k = 0; k < robot_types[t].count; ++k) {
            units.push_back({unit_id(robot_types[t].id, k), t, k});
        }
    }
    return units;
}

bool ProblemInstance::has_conflict(std::string_view a, std::string_view b) const {
    return std::any_of(conflicts.begin(), conflicts.end(), [&](const auto &c) {
        return (c.first == a && c.second == b) || (c.first == b && c.second == a);
    });
}

// ---------------------------------------------------------------------------

std::string describe(const ConstraintDelta &delta) {
    std::ostringstream os;
    std::visit(
        [&](const auto &c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, DependencyChange>) {
                os << "Dependency(" << c.task << " -> " << c.successor << ", " << (c.add ? '+' : '-') << ')';
            } else if constexpr (std::is_same_v<T, DurationChange>) {
                os << "Duration(" << c.task << ", " << c.duration << " min)";
            } else if constexpr (std::is_same_v<T, StartTimeChange>) {
                os << "StartTime(" << c.task << ", " << (c.shift >= 0 ? "+" : "") << c.shift << " min)";
            } else if constexpr (std::is_same_v<T, RobotCountChange>) {
                os << "RobotCount(" << c.robot_type << ", " << (c.change >= 0 ? "+" : "") << c.change << ')';
            } else {
                os << "Conflict(" << c.first << ", " << c.second << ')';
            }
        },
        delta.change);
    return os.str();
}

std::optional<std::string> check_delta(const ProblemInstance &instance, const ConstraintDelta &delta) {
    auto unknown_task = [&](const std::string &id) -> std::optional<std::string> {
        if (!instance.task_index(id)) {
            return "unknown task '" + id + "'";
        }
        return std::nullopt;
    };
    return std::visit(
        [&](const auto &c) -> std::optional<std::string> {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, DependencyChange>) {
                if (auto e = unknown_task(c.task)) return e;
                if (auto e = unknown_task(c.successor)) return e;
                if (c.task == c.successor) return "task '" + c.task + "' cannot depend on itself";
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, DurationChange>) {
                if (auto e = unknown_task(c.task)) return e;
                if (c.duration <= 0) return "duration must be positive";
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, StartTimeChange>) {
                return unknown_task(c.task);
            } else if constexpr (std::is_same_v<T, RobotCountChange>) {
                if (!instance.robot_type_index(c.robot_type)) return "unknown robot type '" + c.robot_type + "'";
                return std::nullopt;
            } else {
                if (auto e = unknown_task(c.first)) return e;
                if (auto e = unknown_task(c.second)) return e;
                if (c.first == c.second) return "task '" + c.first + "' cannot conflict with itself";
                return std::nullopt;
            }
        },
        delta.change);
}

namespace {

Task &task_or_throw(ProblemInstance &instance, const std::string &id) {
    auto idx = instance.task_index(id);
    if (!idx) {
        throw Error(ErrorCode::UnknownTask, "unknown task '" + id + "'");
    }
    return instance.tasks[*idx];
}

} // namespace

ProblemInstance apply_deltas(const ProblemInstance &instance, const std::vector<ConstraintDelta> &deltas) {
    ProblemInstance out = instance;
    for (const auto &delta : deltas) {
        std::visit(
            [&](const auto &c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, DependencyChange>) {
                    task_or_throw(out, c.task);
                    Task &succ = task_or_throw(out, c.successor);
                    if (c.task == c.successor) {
                        throw Error(ErrorCode::InvalidDelta, "task '" + c.task + "' cannot depend on itself");
                    }
                    auto it = std::find(succ.predecessors.begin(), succ.predecessors.end(), c.task);
                    if (c.add) {
                        if (it == succ.predecessors.end()) {
                            succ.predecessors.push_back(c.task);
                        }
                    } else {
                        if (it == succ.predecessors.end()) {
                            throw Error(ErrorCode::RemovingAbsentDependency,
                                        c.successor + " does not depend on " + c.task);
                        }
                        succ.predecessors.erase(it);
                    }
                } else if constexpr (std::is_same_v<T, DurationChange>) {
                    Task &t = task_or_throw(out, c.task);
                    if (c.duration <= 0) {
                        throw Error(ErrorCode::InvalidDelta, "duration of '" + c.task + "' must be positive");
                    }
                    t.duration = c.duration;
                } else if constexpr (std::is_same_v<T, StartTimeChange>) {
                    Task &t = task_or_throw(out, c.task);
                    TimeWindow w = t.window.value_or(TimeWindow{});
                    w.earliest_start = std::max<Minutes>(0, w.earliest_start + c.shift);
                    t.window = w;
                } else if constexpr (std::is_same_v<T, RobotCountChange>) {
                    auto idx = out.robot_type_index(c.robot_type);
                    if (!idx) {
                        throw Error(ErrorCode::UnknownRobotType, "unknown robot type '" + c.robot_type + "'");
                    }
                    auto &rt = out.robot_types[*idx];
                    rt.count = std::max(0, rt.count + c.change);
                } else {
                    task_or_throw(out, c.first);
                    task_or_throw(out, c.second);
                    if (c.first == c.second) {
                        throw Error(ErrorCode::InvalidDelta, "task '" + c.first + "' cannot conflict with itself");
                    }
                    if (!out.has_conflict(c.first, c.second)) {
                        out.conflicts.emplace_back(c.first, c.second);
                    }
                }
            },
            delta.change);
    }
    return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(ViolationKind kind) noexcept {
    switch (kind) {
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::NonPositiveDuration: return "NonPositiveDuration";
    case ViolationKind::VectorLength: return "VectorLength";
    case ViolationKind::NegativeAmount: return "NegativeAmount";
    case ViolationKind::DanglingPredecessor: return "DanglingPredecessor";
    case ViolationKind::DependencyCycle: return "DependencyCycle";
    case ViolationKind::DanglingConflict: return "DanglingConflict";
    case ViolationKind::SelfConflict: return "SelfConflict";
    case ViolationKind::MalformedWindow: return "MalformedWindow";
    case ViolationKind::UnserviceableTask: return "UnserviceableTask";
    case ViolationKind::NegativeRobotCount: return "NegativeRobotCount";
    case ViolationKind::WeightDominance: return "WeightDominance";
    case ViolationKind::HorizonTooSmall: return "HorizonTooSmall";
    }
    return "Violation";
}

bool ValidationReport::contains(ViolationKind kind, const std::vector<std::string> &subjects) const {
    std::multiset<std::string> want(subjects.begin(), subjects.end());
    return std::any_of(violations.begin(), violations.end(), [&](const Violation &v) {
        if (v.kind != kind) return false;
        if (subjects.empty()) return true;
        return std::multiset<std::string>(v.subjects.begin(), v.subjects.end()) == want;
    });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (const auto &v : violations) {
        os << to_string(v.kind) << ": " << v.message << '\n';
    }
    return os.str();
}

bool serviceable(const ProblemInstance &instance, const Task &task) {
    int units = 0;
    for (const auto &rt : instance.robot_types) {
        units += std::max(0, rt.count);
    }
    if (units == 0) {
        return false;
    }
    for (std::size_t k = 0; k < task.requirements.size(); ++k) {
        long long supply = 0;
        for (const auto &rt : instance.robot_types) {
            if (k < rt.capabilities.size()) {
                supply += static_cast<long long>(rt.capabilities[k]) * std::max(0, rt.count);
            }
        }
        if (supply < task.requirements[k]) {
            return false;
        }
    }
    return true;
}

ValidationReport validate_instance(const ProblemInstance &instance) {
    ValidationReport report;
    auto add = [&](ViolationKind kind, std::vector<std::string> subjects, std::string message) {
        report.violations.push_back({kind, std::move(subjects), std::move(message)});
    };
    const std::size_t n_caps = instance.capabilities.size();

    {
        std::set<std::string> seen;
        for (std::size_t k = 0; k < n_caps; ++k) {
            const auto &c = instance.capabilities[k];
            if (c.id != static_cast<int>(k)) {
                add(ViolationKind::DuplicateId, {c.name}, "capability ids must be dense; '" + c.name + "' has id " +
                                                                std::to_string(c.id));
            }
            if (!seen.insert(c.name).second) {
                add(ViolationKind::DuplicateId, {c.name}, "duplicate capability name '" + c.name + "'");
            }
        }
    }
    {
        std::set<std::string> seen;
        for (const auto &rt : instance.robot_types) {
            if (!seen.insert(rt.id).second) {
                add(ViolationKind::DuplicateId, {rt.id}, "duplicate robot type '" + rt.id + "'");
            }
            if (rt.capabilities.size() != n_caps) {
                add(ViolationKind::VectorLength, {rt.id}, "robot type '" + rt.id + "' capability vector has " +
                                                              std::to_string(rt.capabilities.size()) + " entries, expected " +
                                                              std::to_string(n_caps));
            }
            if (std::any_of(rt.capabilities.begin(), rt.capabilities.end(), [](int a) { return a < 0; })) {
                add(ViolationKind::NegativeAmount, {rt.id}, "robot type '" + rt.id + "' has a negative capability amount");
            }
            if (rt.count < 0) {
                add(ViolationKind::NegativeRobotCount, {rt.id}, "robot type '" + rt.id + "' has negative count");
            }
        }
    }

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < instance.tasks.size(); ++i) {
        const auto &t = instance.tasks[i];
        if (!index.emplace(t.id, i).second) {
            add(ViolationKind::DuplicateId, {t.id}, "duplicate task id '" + t.id + "'");
        }
    }
    const Minutes horizon = instance.effective_horizon();
    for (const auto &t : instance.tasks) {
        if (t.duration <= 0) {
            add(ViolationKind::NonPositiveDuration, {t.id}, "task '" + t.id + "' has non-positive duration");
        }
        if (t.requirements.size() != n_caps) {
            add(ViolationKind::VectorLength, {t.id}, "task '" + t.id + "' requirement vector has " +
                                                         std::to_string(t.requirements.size()) + " entries, expected " +
                                                         std::to_string(n_caps));
        }
        if (std::any_of(t.requirements.begin(), t.requirements.end(), [](int b) { return b < 0; })) {
            add(ViolationKind::NegativeAmount, {t.id}, "task '" + t.id + "' has a negative requirement");
        }
        for (const auto &p : t.predecessors) {
            if (!index.count(p)) {
                add(ViolationKind::DanglingPredecessor, {t.id, p}, "task '" + t.id + "' depends on unknown task '" + p + "'");
            }
        }
        if (t.window) {
            const auto &w = *t.window;
            if (w.earliest_start < 0) {
                add(ViolationKind::MalformedWindow, {t.id}, "task '" + t.id + "' window starts before 0");
            }
            if (w.latest_end && w.earliest_start + t.duration > *w.latest_end) {
                add(ViolationKind::MalformedWindow, {t.id},
                    "task '" + t.id + "' window [" + std::to_string(w.earliest_start) + ", " +
                        std::to_string(*w.latest_end) + "] cannot hold duration " + std::to_string(t.duration));
            }
        }
        if (instance.horizon) {
            const Minutes release = t.window ? t.window->earliest_start : 0;
            if (release + t.duration > horizon) {
                add(ViolationKind::HorizonTooSmall, {t.id},
                    "task '" + t.id + "' cannot finish within horizon " + std::to_string(horizon));
            }
        }
        if (t.requirements.size() == n_caps && !serviceable(instance, t)) {
            add(ViolationKind::UnserviceableTask, {t.id}, "no robot team can cover the requirements of '" + t.id + "'");
        }
    }

    // Tarjan SCC over dependency edges (pred -> succ).
    {
        const std::size_t n = instance.tasks.size();
        std::vector<std::vector<std::size_t>> succ(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (const auto &p : instance.tasks[i].predecessors) {
                auto it = index.find(p);
                if (it != index.end()) {
                    succ[it->second].push_back(i);
                }
            }
        }
        std::vector<int> idx(n, -1), low(n, 0);
        std::vector<bool> on_stack(n, false);
        std::vector<std::size_t> stack;
        int counter = 0;
        std::function<void(std::size_t)> strong = [&](std::size_t v) {
            idx[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack[v] = true;
            for (auto w : succ[v]) {
                if (idx[w] < 0) {
                    strong(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], idx[w]);
                }
            }
            if (low[v] == idx[v]) {
                std::vector<std::size_t> comp;
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp.push_back(w);
                } while (w != v);
                const bool self_loop = std::find(succ[v].begin(), succ[v].end(), v) != succ[v].end();
                if (comp.size() > 1 || self_loop) {
                    std::sort(comp.begin(), comp.end());
                    std::vector<std::string> ids;
                    std::string msg = "dependency cycle through";
                    for (auto c : comp) {
                        ids.push_back(instance.tasks[c].id);
                        msg += " " + instance.tasks[c].id;
                    }
                    add(ViolationKind::DependencyCycle, std::move(ids), msg);
                }
            }
        };
        for (std::size_t v = 0; v < n; ++v) {
            if (idx[v] < 0) {
                strong(v);
            }
        }
    }

    for (const auto &[a, b] : instance.conflicts) {
        if (!index.count(a) || !index.count(b)) {
            add(ViolationKind::DanglingConflict, {a, b}, "conflict (" + a + ", " + b + ") references an unknown task");
        } else if (a == b) {
            add(ViolationKind::SelfConflict, {a}, "task '" + a + "' conflicts with itself");
        }
    }

    const auto &w = instance.weights;
    if (w.makespan <= w.completion || w.makespan <= w.robots || w.makespan <= w.reassignment ||
        w.makespan <= w.retiming || w.completion < 0 || w.robots < 0 || w.reassignment < 0 || w.retiming < 0) {
        add(ViolationKind::WeightDominance, {}, "makespan weight must exceed every other non-negative weight");
    }
    return report;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SolveStatus status) noexcept {
    switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::FeasibleWithGap: return "FeasibleWithGap";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unknown: return "Unknown";
    }
    return "Unknown";
}

std::optional<SolveStatus> parse_solve_status(std::string_view text) noexcept {
    for (auto s : {SolveStatus::Optimal, SolveStatus::FeasibleWithGap, SolveStatus::Infeasible, SolveStatus::Unknown}) {
        if (to_string(s) == text) {
            return s;
        }
    }
    return std::nullopt;
}

const TaskAssignment *Plan::find(std::string_view task) const {
    for (const auto &t : tasks) {
        if (t.task == task) {
            return &t;
        }
    }
    return nullptr;
}

bool Plan::same_schedule(const Plan &other) const {
    if (tasks.size() != other.tasks.size()) {
        return false;
    }
    for (const auto &t : tasks) {
        const auto *o = other.find(t.task);
        if (!o || !(*o == t)) {
            return false;
        }
    }
    return true;
}

} // namespace forecrew
