#pragma once

// Brute-force reference solvers for small instances. They enumerate every covering unit subset and
// every integer start time, sharing no code with the branch-and-bound search.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "forecrew/model.hpp"

namespace oracle {

using forecrew::Minutes;
using forecrew::Plan;
using forecrew::ProblemInstance;

struct Result {
    bool feasible = false;
    std::int64_t objective = std::numeric_limits<std::int64_t>::max();
    std::vector<Minutes> start;
    std::vector<unsigned> team;
};

struct Pinned {
    Minutes start = 0;
    Minutes end = 0;
    unsigned team = 0;
};

struct Replan {
    Minutes replan_time = 0;
    std::vector<std::optional<Pinned>> frozen; // per task
    std::vector<Minutes> orig_start, orig_end;
    std::vector<unsigned> orig_team;
};

inline Result search(const ProblemInstance &inst, const Replan *rp) {
    const auto units = inst.expand_units();
    const int U = static_cast<int>(units.size());
    const int n = static_cast<int>(inst.tasks.size());
    std::map<std::string, int> index;
    for (int i = 0; i < n; ++i) index[inst.tasks[i].id] = i;

    Minutes total = 0, release = 0;
    for (const auto &t : inst.tasks) {
        total += t.duration;
        if (t.window) release = std::max(release, t.window->earliest_start);
    }
    if (rp) {
        release = std::max(release, rp->replan_time);
        for (auto s : rp->orig_start) release = std::max(release, s);
    }
    const Minutes H = inst.horizon ? *inst.horizon : release + total;

    std::vector<std::vector<unsigned>> teams(n);
    for (int i = 0; i < n; ++i) {
        const auto &t = inst.tasks[i];
        for (unsigned m = 1; m < (1u << U); ++m) {
            bool ok = true;
            for (std::size_t k = 0; k < t.requirements.size() && ok; ++k) {
                long long have = 0;
                for (int u = 0; u < U; ++u) {
                    if (m >> u & 1) {
                        const auto &caps = inst.robot_types[units[u].type].capabilities;
                        have += k < caps.size() ? caps[k] : 0;
                    }
                }
                ok = have >= t.requirements[k];
            }
            if (ok) teams[i].push_back(m);
        }
    }
    std::vector<std::vector<int>> preds(n);
    for (int i = 0; i < n; ++i) {
        for (const auto &p : inst.tasks[i].predecessors) preds[i].push_back(index.at(p));
    }
    std::vector<std::vector<bool>> conflict(n, std::vector<bool>(n, false));
    for (const auto &[a, b] : inst.conflicts) {
        conflict[index.at(a)][index.at(b)] = conflict[index.at(b)][index.at(a)] = true;
    }
    const auto &w = inst.weights;

    Result best;
    std::vector<Minutes> s(n), e(n);
    std::vector<unsigned> tm(n);
    auto cost_of = [&](int upto) {
        Minutes ms = 0;
        std::int64_t c = 0;
        for (int i = 0; i < upto; ++i) {
            ms = std::max(ms, e[i]);
            c += w.completion * e[i] + w.robots * __builtin_popcount(tm[i]);
            if (rp && !rp->frozen[i]) {
                c += w.reassignment * __builtin_popcount(tm[i] ^ rp->orig_team[i]);
                c += w.retiming * (std::abs(s[i] - rp->orig_start[i]) + std::abs(e[i] - rp->orig_end[i]));
            }
        }
        return c + w.makespan * ms;
    };
    auto fits = [&](int i) {
        const auto &t = inst.tasks[i];
        if (t.window) {
            if (s[i] < t.window->earliest_start) return false;
            if (t.window->latest_end && e[i] > *t.window->latest_end) return false;
        }
        if (e[i] > H) return false;
        for (int j = 0; j < i; ++j) {
            const bool disjoint = e[j] <= s[i] || e[i] <= s[j];
            if ((tm[i] & tm[j]) && !disjoint) return false;
            if (conflict[i][j] && !disjoint) return false;
        }
        for (int p : preds[i]) {
            if (p < i && e[p] > s[i]) return false;
        }
        for (int j = 0; j < i; ++j) {
            for (int p : preds[j]) {
                if (p == i && e[i] > s[j]) return false;
            }
        }
        return true;
    };
    auto rec = [&](auto &&self, int i) -> void {
        if (cost_of(i) >= best.objective) return;
        if (i == n) {
            best.feasible = true;
            best.objective = cost_of(n);
            best.start = s;
            best.team = tm;
            return;
        }
        const Minutes d = inst.tasks[i].duration;
        if (rp && rp->frozen[i]) {
            s[i] = rp->frozen[i]->start;
            e[i] = rp->frozen[i]->end;
            tm[i] = rp->frozen[i]->team;
            if (e[i] - s[i] == d && fits(i)) self(self, i + 1);
            return;
        }
        const Minutes lo = rp ? rp->replan_time : 0;
        for (unsigned m : teams[i]) {
            for (Minutes t0 = lo; t0 + d <= H; ++t0) {
                s[i] = t0;
                e[i] = t0 + d;
                tm[i] = m;
                if (fits(i)) self(self, i + 1);
            }
        }
    };
    rec(rec, 0);
    return best;
}

inline Result solve(const ProblemInstance &inst) { return search(inst, nullptr); }

/// Active-schedule reference for base solves of up to ~7 tasks: every inclusion-minimal covering
/// unit team per task and every task order, each task placed at its earliest feasible start given
/// the tasks before it in the order (gaps allowed). An optimal schedule is always active.
inline std::int64_t solve_active(const ProblemInstance &inst, bool *feasible) {
    const auto units = inst.expand_units();
    const int U = static_cast<int>(units.size());
    const int n = static_cast<int>(inst.tasks.size());
    std::map<std::string, int> index;
    for (int i = 0; i < n; ++i) index[inst.tasks[i].id] = i;
    std::vector<std::vector<unsigned>> teams(n);
    for (int i = 0; i < n; ++i) {
        const auto &t = inst.tasks[i];
        std::vector<unsigned> cover;
        for (unsigned m = 1; m < (1u << U); ++m) {
            bool ok = true;
            for (std::size_t k = 0; k < t.requirements.size() && ok; ++k) {
                long long have = 0;
                for (int u = 0; u < U; ++u) {
                    if (m >> u & 1) {
                        const auto &caps = inst.robot_types[units[u].type].capabilities;
                        have += k < caps.size() ? caps[k] : 0;
                    }
                }
                ok = have >= t.requirements[k];
            }
            if (ok) cover.push_back(m);
        }
        for (unsigned m : cover) {
            bool minimal = true;
            for (unsigned o : cover) minimal = minimal && !(o != m && (o & m) == o);
            if (minimal) teams[i].push_back(m);
        }
    }
    std::vector<std::vector<int>> preds(n);
    for (int i = 0; i < n; ++i) {
        for (const auto &p : inst.tasks[i].predecessors) preds[i].push_back(index.at(p));
    }
    std::vector<std::vector<bool>> conflict(n, std::vector<bool>(n, false));
    for (const auto &[a, b] : inst.conflicts) {
        conflict[index.at(a)][index.at(b)] = conflict[index.at(b)][index.at(a)] = true;
    }
    const auto &w = inst.weights;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    *feasible = false;

    std::vector<int> order;
    std::vector<bool> used(n, false);
    std::vector<Minutes> s(n), e(n);
    std::vector<unsigned> tm(n);
    auto rec = [&](auto &&self, std::int64_t partial_sum, Minutes ms) -> void {
        if (w.makespan * ms + partial_sum >= best) return;
        if (static_cast<int>(order.size()) == n) {
            best = w.makespan * ms + partial_sum;
            *feasible = true;
            return;
        }
        for (int i = 0; i < n; ++i) {
            if (used[i]) continue;
            bool ready = true;
            Minutes est = inst.tasks[i].window ? inst.tasks[i].window->earliest_start : 0;
            for (int p : preds[i]) {
                ready = ready && used[p];
                if (used[p]) est = std::max(est, e[p]);
            }
            if (!ready) continue;
            const Minutes d = inst.tasks[i].duration;
            for (unsigned m : teams[i]) {
                // Earliest start avoiding every placed task sharing a unit or in conflict.
                Minutes t0 = est;
                for (bool moved = true; moved;) {
                    moved = false;
                    for (int j : order) {
                        if (((tm[j] & m) || conflict[i][j]) && t0 < e[j] && s[j] < t0 + d) {
                            t0 = e[j];
                            moved = true;
                        }
                    }
                }
                const auto &win = inst.tasks[i].window;
                if (win && win->latest_end && t0 + d > *win->latest_end) continue;
                if (inst.horizon && t0 + d > *inst.horizon) continue;
                s[i] = t0;
                e[i] = t0 + d;
                tm[i] = m;
                used[i] = true;
                order.push_back(i);
                self(self, partial_sum + w.completion * e[i] + w.robots * __builtin_popcount(m),
                     std::max(ms, e[i]));
                order.pop_back();
                used[i] = false;
            }
        }
    };
    rec(rec, 0, 0);
    return best;
}


inline unsigned team_mask(const ProblemInstance &inst, const std::vector<std::string> &robots) {
    const auto units = inst.expand_units();
    unsigned m = 0;
    for (const auto &r : robots) {
        for (std::size_t u = 0; u < units.size(); ++u) {
            if (units[u].id == r) m |= 1u << u;
        }
    }
    return m;
}

/// Replan reference: tasks with original start <= t_r keep start, end and team; others start at or after t_r.
inline Result replan(const ProblemInstance &inst, const Plan &original, Minutes t_r) {
    Replan rp;
    rp.replan_time = t_r;
    for (const auto &t : inst.tasks) {
        const auto *a = original.find(t.id);
        const unsigned m = team_mask(inst, a->robots);
        rp.orig_start.push_back(a->start);
        rp.orig_end.push_back(a->end);
        rp.orig_team.push_back(m);
        rp.frozen.push_back(a->start <= t_r ? std::optional<Pinned>(Pinned{a->start, a->end, m}) : std::nullopt);
    }
    return search(inst, &rp);
}

/// Small random instance: two capabilities, two robot types, n tasks of 1-3 minutes.
inline ProblemInstance random_instance(std::mt19937 &rng, int n, bool extras) {
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    ProblemInstance inst;
    inst.capabilities = {{0, "lift"}, {1, "grip"}};
    inst.robot_types.push_back({"A", {pick(1, 2), pick(0, 1)}, pick(1, 2)});
    inst.robot_types.push_back({"B", {pick(0, 1), pick(1, 2)}, pick(1, 2)});
    for (int i = 0; i < n; ++i) {
        forecrew::Task t;
        t.id = "T" + std::to_string(i + 1);
        t.duration = pick(1, 3);
        t.requirements = {pick(0, 2), pick(0, 2)};
        for (int j = 0; j < i; ++j) {
            if (pick(0, 3) == 0) t.predecessors.push_back("T" + std::to_string(j + 1));
        }
        if (extras && pick(0, 3) == 0) {
            forecrew::TimeWindow w;
            w.earliest_start = pick(0, 3);
            if (pick(0, 1)) w.latest_end = w.earliest_start + t.duration + pick(0, 6);
            t.window = w;
        }
        inst.tasks.push_back(t);
    }
    if (extras && n >= 2 && pick(0, 2) == 0) {
        int a = pick(0, n - 1), b = pick(0, n - 1);
        if (a != b) inst.conflicts.push_back({inst.tasks[a].id, inst.tasks[b].id});
    }
    return inst;
}

} // namespace oracle
