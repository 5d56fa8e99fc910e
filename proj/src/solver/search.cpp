#include "forecrew/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "timing.hpp"

namespace forecrew {

namespace {

using Mask = std::uint64_t;
constexpr std::int64_t kNoBound = std::numeric_limits<std::int64_t>::max();

int popcount(Mask m) { return __builtin_popcountll(m); }

struct UnitTeam {
    Mask mask = 0;
    int size = 0;
    std::int64_t reassign = 0; // |team xor original team| for future tasks
};

struct Group {
    Mask mask = 0;
    int size = 0;
    std::vector<int> need; // minimum units of the group in any team, per task
};

// Flattened, index-based view of a program.
struct Compiled {
    int n = 0;
    int n_units = 0;
    int n_types = 0;
    std::vector<Minutes> dur, release, deadline, tail;
    std::vector<std::vector<int>> preds, succs, conflicts;
    std::vector<int> unit_type;
    std::vector<std::vector<int>> units_of_type;
    std::vector<std::vector<TypeTeam>> type_teams;
    std::vector<std::vector<UnitTeam>> unit_teams;
    std::vector<int> min_team_size;
    std::vector<int> topo;
    std::vector<int> placed_after; // symmetry: this task may only be placed once the given task is
    std::vector<Group> groups;
    std::vector<std::vector<int>> cliques; // pairwise-conflicting task sets, at least 3 tasks
    ObjectiveWeights w;

    bool replan = false;
    Minutes replan_time = 0;
    std::vector<char> frozen;
    std::vector<Minutes> orig_start, orig_end;
    std::vector<Mask> orig_mask;
    std::vector<std::int64_t> min_reassign;
    std::int64_t removed_reassign = 0; // original units that no longer exist, counted once per future task use
};

struct State {
    std::vector<char> placed;
    std::vector<Minutes> start, end;
    std::vector<Mask> team;
    std::vector<Minutes> free;
    std::vector<int> order; // placement order of non-frozen tasks
    Minutes s_last = 0;
    int idx_last = -1;
    int n_placed = 0;
    Minutes max_end = 0;
    std::int64_t sum_end = 0;
    std::int64_t units_used = 0;
    std::int64_t reassign = 0;
};

struct Child {
    Minutes start = 0;
    int task = 0;
    Mask mask = 0;
    int size = 0;
    std::size_t option = 0;
};

std::vector<int> topological(const Compiled &m) {
    std::vector<int> indeg(m.n, 0), order;
    std::vector<std::vector<int>> out(m.n);
    for (int i = 0; i < m.n; ++i) {
        for (int p : m.preds[i]) {
            out[p].push_back(i);
            ++indeg[i];
        }
        if (m.placed_after[i] >= 0) {
            out[m.placed_after[i]].push_back(i);
            ++indeg[i];
        }
    }
    std::set<int> ready;
    for (int i = 0; i < m.n; ++i) {
        if (indeg[i] == 0) ready.insert(i);
    }
    while (!ready.empty()) {
        int v = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(v);
        for (int s : out[v]) {
            if (--indeg[s] == 0) ready.insert(s);
        }
    }
    return order;
}

// Components of the undirected precedence graph that are interchangeable.
void symmetry_chains(Compiled &m, const ProblemInstance &inst) {
    m.placed_after.assign(m.n, -1);
    std::vector<int> comp(m.n, -1);
    std::vector<std::vector<int>> comps;
    for (int i = 0; i < m.n; ++i) {
        if (comp[i] >= 0) continue;
        std::vector<int> members, stack{i};
        comp[i] = static_cast<int>(comps.size());
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            members.push_back(v);
            auto visit = [&](int u) {
                if (comp[u] < 0) {
                    comp[u] = comp[i];
                    stack.push_back(u);
                }
            };
            for (int u : m.preds[v]) visit(u);
            for (int u : m.succs[v]) visit(u);
        }
        std::sort(members.begin(), members.end());
        comps.push_back(std::move(members));
    }
    auto same_task = [&](int a, int b) {
        const auto &ta = inst.tasks[a];
        const auto &tb = inst.tasks[b];
        return ta.duration == tb.duration && ta.requirements == tb.requirements && ta.window == tb.window &&
               m.preds[a].size() == m.preds[b].size() && m.succs[a].size() == m.succs[b].size();
    };
    // Backtracking isomorphism from component A onto component B with min(A) -> min(B).
    auto isomorphism = [&](const std::vector<int> &A, const std::vector<int> &B) -> std::vector<int> {
        if (A.size() != B.size()) return {};
        std::vector<int> phi(m.n, -1);
        std::vector<char> used(m.n, 0);
        std::function<bool(std::size_t)> rec = [&](std::size_t k) -> bool {
            if (k == A.size()) return true;
            const int a = A[k];
            for (int b : B) {
                if (used[b] || !same_task(a, b)) continue;
                if (k == 0 && b != B[0]) continue;
                bool ok = true;
                for (int p : m.preds[a]) {
                    if (phi[p] >= 0 && std::find(m.preds[b].begin(), m.preds[b].end(), phi[p]) == m.preds[b].end()) {
                        ok = false;
                        break;
                    }
                }
                for (int s : m.succs[a]) {
                    if (!ok) break;
                    if (phi[s] >= 0 && std::find(m.succs[b].begin(), m.succs[b].end(), phi[s]) == m.succs[b].end()) {
                        ok = false;
                    }
                }
                if (!ok) continue;
                phi[a] = b;
                used[b] = 1;
                if (rec(k + 1)) return true;
                phi[a] = -1;
                used[b] = 0;
            }
            return false;
        };
        if (!rec(0)) return {};
        return phi;
    };
    auto swap_invariant = [&](const std::vector<int> &A, const std::vector<int> &phi) {
        std::vector<int> perm(m.n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int a : A) {
            perm[a] = phi[a];
            perm[phi[a]] = a;
        }
        std::set<std::pair<int, int>> pairs;
        for (int i = 0; i < m.n; ++i) {
            for (int j : m.conflicts[i]) pairs.insert({std::min(i, j), std::max(i, j)});
        }
        for (const auto &[i, j] : pairs) {
            const int a = perm[i], b = perm[j];
            if (!pairs.count({std::min(a, b), std::max(a, b)})) return false;
        }
        return true;
    };
    std::vector<char> assigned(comps.size(), 0);
    for (std::size_t c = 0; c < comps.size(); ++c) {
        if (assigned[c]) continue;
        assigned[c] = 1;
        std::vector<std::size_t> cls{c};
        for (std::size_t d = c + 1; d < comps.size(); ++d) {
            if (assigned[d]) continue;
            bool ok = true;
            for (auto member : cls) {
                auto phi = isomorphism(comps[member], comps[d]);
                if (phi.empty() || !swap_invariant(comps[member], phi)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                assigned[d] = 1;
                cls.push_back(d);
            }
        }
        for (std::size_t k = 1; k < cls.size(); ++k) {
            m.placed_after[comps[cls[k]][0]] = comps[cls[k - 1]][0];
        }
    }
}

Compiled compile(const IntegerProgram &prog) {
    const auto &inst = prog.instance;
    Compiled m;
    m.n = static_cast<int>(inst.tasks.size());
    m.n_units = static_cast<int>(prog.units.size());
    m.n_types = static_cast<int>(inst.robot_types.size());
    m.w = inst.weights;
    m.preds.resize(m.n);
    m.succs.resize(m.n);
    m.conflicts.resize(m.n);
    for (int i = 0; i < m.n; ++i) {
        const auto &t = inst.tasks[i];
        m.dur.push_back(t.duration);
        m.release.push_back(t.window ? t.window->earliest_start : 0);
        Minutes dl = prog.horizon;
        if (t.window && t.window->latest_end) dl = std::min(dl, *t.window->latest_end);
        m.deadline.push_back(dl);
        for (const auto &p : t.predecessors) {
            const int j = static_cast<int>(*inst.task_index(p));
            m.preds[i].push_back(j);
            m.succs[j].push_back(i);
        }
    }
    for (const auto &[a, b] : inst.conflicts) {
        const int i = static_cast<int>(*inst.task_index(a));
        const int j = static_cast<int>(*inst.task_index(b));
        if (std::find(m.conflicts[i].begin(), m.conflicts[i].end(), j) == m.conflicts[i].end()) {
            m.conflicts[i].push_back(j);
            m.conflicts[j].push_back(i);
        }
    }
    // Greedy maximal cliques of the conflict graph, seeded by uncovered edges.
    {
        std::set<std::pair<int, int>> covered;
        auto adjacent = [&](int a, int b) {
            return std::find(m.conflicts[a].begin(), m.conflicts[a].end(), b) != m.conflicts[a].end();
        };
        for (int i = 0; i < m.n; ++i) {
            for (int j : m.conflicts[i]) {
                if (j < i || covered.count({i, j})) continue;
                std::vector<int> clique = {i, j};
                for (int k = 0; k < m.n; ++k) {
                    if (k == i || k == j) continue;
                    if (std::all_of(clique.begin(), clique.end(), [&](int c) { return adjacent(c, k); })) {
                        clique.push_back(k);
                    }
                }
                for (int a : clique) {
                    for (int b : clique) {
                        if (a < b) covered.insert({a, b});
                    }
                }
                if (clique.size() >= 3) m.cliques.push_back(std::move(clique));
            }
        }
    }
    m.units_of_type.resize(m.n_types);
    for (int u = 0; u < m.n_units; ++u) {
        m.unit_type.push_back(static_cast<int>(prog.units[u].type));
        m.units_of_type[prog.units[u].type].push_back(u);
    }
    m.type_teams = prog.teams;
    for (int i = 0; i < m.n; ++i) {
        int best = std::numeric_limits<int>::max();
        for (const auto &t : m.type_teams[i]) best = std::min(best, t.size);
        m.min_team_size.push_back(best);
    }

    m.replan = prog.replan.has_value();
    if (m.replan) {
        const auto &rd = *prog.replan;
        m.replan_time = rd.replan_time;
        m.frozen.assign(m.n, 0);
        m.orig_start.assign(m.n, 0);
        m.orig_end.assign(m.n, 0);
        m.orig_mask.assign(m.n, 0);
        m.min_reassign.assign(m.n, 0);
        for (int i = 0; i < m.n; ++i) {
            m.frozen[i] = rd.frozen[i] ? 1 : 0;
            const auto *a = rd.original.find(inst.tasks[i].id);
            m.orig_start[i] = a->start;
            m.orig_end[i] = a->end;
            for (const auto &r : a->robots) {
                bool found = false;
                for (int u = 0; u < m.n_units; ++u) {
                    if (prog.units[u].id == r) {
                        m.orig_mask[i] |= Mask{1} << u;
                        found = true;
                    }
                }
                if (!found && !m.frozen[i]) m.removed_reassign += 1;
            }
        }
        // Unit-level teams, since unit identity matters for reassignment.
        m.unit_teams.resize(m.n);
        for (int i = 0; i < m.n; ++i) {
            std::set<Mask> seen;
            for (const auto &tt : m.type_teams[i]) {
                std::vector<Mask> partial{0};
                for (int ty = 0; ty < m.n_types; ++ty) {
                    const int q = tt.per_type[ty];
                    if (q == 0) continue;
                    const auto &us = m.units_of_type[ty];
                    std::vector<Mask> next;
                    std::vector<int> pick(q);
                    std::function<void(int, int, Mask)> choose = [&](int from, int k, Mask acc) {
                        if (k == q) {
                            for (Mask base : partial) next.push_back(base | acc);
                            return;
                        }
                        for (int x = from; x < static_cast<int>(us.size()); ++x) {
                            choose(x + 1, k + 1, acc | (Mask{1} << us[x]));
                        }
                    };
                    choose(0, 0, 0);
                    partial = std::move(next);
                }
                for (Mask mk : partial) {
                    if (!seen.insert(mk).second) continue;
                    UnitTeam ut{mk, popcount(mk), popcount(mk ^ m.orig_mask[i])};
                    m.unit_teams[i].push_back(ut);
                }
            }
            // The original team stays available even when it is not minimal.
            const Mask orig = m.orig_mask[i];
            if (!m.frozen[i] && orig != 0 && !seen.count(orig)) {
                bool covers = true;
                const auto &task = inst.tasks[i];
                for (std::size_t k = 0; k < task.requirements.size() && covers; ++k) {
                    long long have = 0;
                    for (int u = 0; u < m.n_units; ++u) {
                        if (!(orig >> u & 1)) continue;
                        const auto &caps = inst.robot_types[m.unit_type[u]].capabilities;
                        have += k < caps.size() ? caps[k] : 0;
                    }
                    covers = have >= task.requirements[k];
                }
                if (covers) m.unit_teams[i].push_back(UnitTeam{orig, popcount(orig), 0});
            }
            std::stable_sort(m.unit_teams[i].begin(), m.unit_teams[i].end(), [](const UnitTeam &a, const UnitTeam &b) {
                if (a.size != b.size) return a.size < b.size;
                if (a.reassign != b.reassign) return a.reassign < b.reassign;
                return a.mask < b.mask;
            });
            std::int64_t best = std::numeric_limits<std::int64_t>::max();
            for (const auto &ut : m.unit_teams[i]) best = std::min(best, ut.reassign);
            m.min_reassign[i] = m.unit_teams[i].empty() ? 0 : best;
        }
        m.placed_after.assign(m.n, -1);
    } else {
        symmetry_chains(m, inst);
    }

    m.topo = topological(m);
    m.tail.assign(m.n, 0);
    for (auto it = m.topo.rbegin(); it != m.topo.rend(); ++it) {
        const int i = *it;
        Minutes best = 0;
        for (int s : m.succs[i]) best = std::max(best, m.tail[s]);
        m.tail[i] = m.dur[i] + best;
    }

    // Resource groups: units of each type, and providers of each capability.
    std::set<Mask> masks;
    for (int ty = 0; ty < m.n_types; ++ty) {
        Mask mk = 0;
        for (int u : m.units_of_type[ty]) mk |= Mask{1} << u;
        if (mk) masks.insert(mk);
    }
    for (std::size_t k = 0; k < inst.capabilities.size(); ++k) {
        Mask mk = 0;
        for (int u = 0; u < m.n_units; ++u) {
            if (inst.robot_types[m.unit_type[u]].capabilities[k] > 0) mk |= Mask{1} << u;
        }
        if (mk) masks.insert(mk);
    }
    for (Mask mk : masks) {
        Group g{mk, popcount(mk), std::vector<int>(m.n, 0)};
        bool useful = false;
        for (int i = 0; i < m.n; ++i) {
            int best = std::numeric_limits<int>::max();
            for (const auto &tt : m.type_teams[i]) {
                int c = 0;
                for (int ty = 0; ty < m.n_types; ++ty) {
                    if (tt.per_type[ty] > 0 && !m.units_of_type[ty].empty() &&
                        (mk >> m.units_of_type[ty][0] & 1)) {
                        c += tt.per_type[ty];
                    }
                }
                best = std::min(best, c);
            }
            g.need[i] = m.type_teams[i].empty() ? 0 : best;
            useful = useful || g.need[i] > 0;
        }
        if (useful) m.groups.push_back(std::move(g));
    }
    return m;
}

std::int64_t retime_cost(const Compiled &m, int i, Minutes s) {
    const Minutes e = s + m.dur[i];
    return std::abs(s - m.orig_start[i]) + std::abs(e - m.orig_end[i]);
}

// Least retiming penalty over starts no earlier than lb.
std::int64_t retime_floor(const Compiled &m, int i, Minutes lb) {
    const Minutes a = m.orig_start[i];
    const Minutes b = m.orig_end[i] - m.dur[i];
    return retime_cost(m, i, std::max(lb, std::min(a, b)));
}

class Search {
public:
    Search(const Compiled &m, const SolveLimits &limits) : m_(m), limits_(limits) {}

    void run(State root);

    bool has_incumbent = false;
    std::int64_t inc_obj = kNoBound;
    std::vector<Minutes> inc_start;
    std::vector<Mask> inc_team;
    SolveStats stats;
    bool aborted = false;
    bool gap_pruned = false;
    std::int64_t open_bound = kNoBound;

    void offer(const State &st);
    State initial_state() const;
    void place(State &st, int i, Minutes s, Mask mask) const;
    bool greedy(State st, bool by_tail, bool keep_original);
    void original_order(State st);

private:
    const Compiled &m_;
    const SolveLimits &limits_;
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
    std::vector<std::int64_t> stack_lb_;

    std::int64_t bound(const State &st, std::vector<Minutes> &est) const;
    Minutes base_start(const State &st, int i) const;
    bool should_stop();
    void dfs(State &st);
    std::int64_t evaluate(const State &st, std::vector<Minutes> &starts) const;
};

State Search::initial_state() const {
    State st;
    st.placed.assign(m_.n, 0);
    st.start.assign(m_.n, 0);
    st.end.assign(m_.n, 0);
    st.team.assign(m_.n, 0);
    st.free.assign(m_.n_units, 0);
    if (m_.replan) {
        st.s_last = m_.replan_time;
        for (int i = 0; i < m_.n; ++i) {
            if (!m_.frozen[i]) continue;
            st.placed[i] = 1;
            st.start[i] = m_.orig_start[i];
            st.end[i] = m_.orig_end[i];
            st.team[i] = m_.orig_mask[i];
            ++st.n_placed;
            st.max_end = std::max(st.max_end, st.end[i]);
            st.sum_end += st.end[i];
            st.units_used += popcount(m_.orig_mask[i]);
            for (int u = 0; u < m_.n_units; ++u) {
                if (m_.orig_mask[i] >> u & 1) st.free[u] = std::max(st.free[u], st.end[i]);
            }
        }
    }
    return st;
}

void Search::place(State &st, int i, Minutes s, Mask mask) const {
    st.placed[i] = 1;
    st.start[i] = s;
    st.end[i] = s + m_.dur[i];
    st.team[i] = mask;
    st.order.push_back(i);
    ++st.n_placed;
    st.s_last = s;
    st.idx_last = i;
    st.max_end = std::max(st.max_end, st.end[i]);
    st.sum_end += st.end[i];
    st.units_used += popcount(mask);
    if (m_.replan) st.reassign += popcount(mask ^ m_.orig_mask[i]);
    for (int u = 0; u < m_.n_units; ++u) {
        if (mask >> u & 1) st.free[u] = st.end[i];
    }
}

// Earliest start from release, placed predecessors and placed conflict partners.
Minutes Search::base_start(const State &st, int i) const {
    Minutes s = m_.release[i];
    if (m_.replan) s = std::max(s, m_.replan_time);
    for (int p : m_.preds[i]) s = std::max(s, st.end[p]);
    for (int c : m_.conflicts[i]) {
        if (st.placed[c]) s = std::max(s, st.end[c]);
    }
    return s;
}

bool Search::should_stop() {
    if ((stats.nodes & 1023) != 0) return aborted;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    if (elapsed >= limits_.time_seconds) {
        stats.time_limit_hit = true;
        aborted = true;
    }
    if (stats.nodes >= limits_.node_budget) {
        stats.node_limit_hit = true;
        aborted = true;
    }
    if (limits_.stop && limits_.stop->load()) {
        stats.stopped = true;
        aborted = true;
    }
    return aborted;
}

// Lower bound on the objective of every completion of st; kNoBound when none is feasible.
std::int64_t Search::bound(const State &st, std::vector<Minutes> &est) const {
    est.assign(m_.n, 0);
    Minutes ms = st.max_end;
    std::int64_t sum_end = 0;
    std::int64_t units = st.units_used;
    std::int64_t reassign = st.reassign;
    std::int64_t retime = 0;

    // Sorted free times per type, clipped at the last start.
    std::vector<std::vector<Minutes>> avail(m_.n_types);
    for (int ty = 0; ty < m_.n_types; ++ty) {
        for (int u : m_.units_of_type[ty]) avail[ty].push_back(std::max(st.free[u], st.s_last));
        std::sort(avail[ty].begin(), avail[ty].end());
    }
    for (int i : m_.topo) {
        if (st.placed[i]) {
            est[i] = st.start[i];
            sum_end += st.end[i];
            if (m_.replan && !m_.frozen[i]) retime += retime_floor(m_, i, st.start[i]);
            continue;
        }
        Minutes e = std::max(m_.release[i], st.s_last + (i < st.idx_last ? 1 : 0));
        for (int p : m_.preds[i]) e = std::max(e, st.placed[p] ? st.end[p] : est[p] + m_.dur[p]);
        for (int c : m_.conflicts[i]) {
            if (st.placed[c]) e = std::max(e, st.end[c]);
        }
        const int after = m_.placed_after[i];
        if (after >= 0 && !st.placed[after]) e = std::max(e, est[after] + (after > i ? 1 : 0));
        Minutes team_ready = std::numeric_limits<Minutes>::max();
        if (m_.replan) {
            for (const auto &ut : m_.unit_teams[i]) {
                Minutes r = 0;
                for (int u = 0; u < m_.n_units; ++u) {
                    if (ut.mask >> u & 1) r = std::max(r, st.free[u]);
                }
                team_ready = std::min(team_ready, r);
            }
        } else {
            for (const auto &tt : m_.type_teams[i]) {
                Minutes r = 0;
                for (int ty = 0; ty < m_.n_types; ++ty) {
                    if (tt.per_type[ty] > 0) r = std::max(r, avail[ty][tt.per_type[ty] - 1]);
                }
                team_ready = std::min(team_ready, r);
            }
        }
        e = std::max(e, team_ready);
        if (e + m_.dur[i] > m_.deadline[i]) return kNoBound;
        est[i] = e;
        ms = std::max(ms, e + m_.tail[i]);
        sum_end += e + m_.dur[i];
        units += m_.min_team_size[i];
        if (m_.replan) {
            reassign += m_.min_reassign[i];
            retime += retime_floor(m_, i, e);
        }
    }

    // Energy and parallel-machine bounds per resource group.
    std::int64_t best_sum = sum_end;
    std::vector<Minutes> machine;
    std::vector<Minutes> jobs;
    for (const auto &g : m_.groups) {
        std::int64_t work = 0;
        Minutes min_after = std::numeric_limits<Minutes>::max();
        jobs.clear();
        std::int64_t job_est_sum = 0;
        for (int i = 0; i < m_.n; ++i) {
            if (st.placed[i] || g.need[i] == 0) continue;
            work += static_cast<std::int64_t>(g.need[i]) * m_.dur[i];
            min_after = std::min(min_after, m_.tail[i] - m_.dur[i]);
            jobs.push_back(m_.dur[i]);
            job_est_sum += est[i] + m_.dur[i];
        }
        if (jobs.empty()) continue;
        machine.clear();
        for (int u = 0; u < m_.n_units; ++u) {
            if (g.mask >> u & 1) {
                machine.push_back(std::max(st.free[u], st.s_last));
            }
        }
        // Earliest time by which the k first-free units could absorb all remaining work.
        std::sort(machine.begin(), machine.end());
        std::int64_t finish = std::numeric_limits<std::int64_t>::max();
        std::int64_t prefix = 0;
        for (std::size_t k = 0; k < machine.size(); ++k) {
            prefix += machine[k];
            const auto kk = static_cast<std::int64_t>(k + 1);
            finish = std::min(finish, std::max<std::int64_t>(machine[k], (prefix + work + kk - 1) / kk));
        }
        ms = std::max(ms, finish + min_after);
        // Shortest jobs first onto the earliest free machine.
        std::sort(jobs.begin(), jobs.end());
        std::int64_t spt = 0;
        for (Minutes d : jobs) {
            auto it = std::min_element(machine.begin(), machine.end());
            *it += d;
            spt += *it;
        }
        if (spt > job_est_sum) best_sum = std::max(best_sum, sum_end - job_est_sum + spt);
    }
    // Each conflict clique is a single machine.
    for (const auto &clique : m_.cliques) {
        Minutes ready = st.s_last;
        Minutes first = std::numeric_limits<Minutes>::max();
        Minutes min_after = std::numeric_limits<Minutes>::max();
        std::int64_t job_est_sum = 0;
        jobs.clear();
        for (int i : clique) {
            if (st.placed[i]) {
                ready = std::max(ready, st.end[i]);
                continue;
            }
            first = std::min(first, est[i]);
            min_after = std::min(min_after, m_.tail[i] - m_.dur[i]);
            jobs.push_back(m_.dur[i]);
            job_est_sum += est[i] + m_.dur[i];
        }
        if (jobs.empty()) continue;
        Minutes t = std::max(ready, first);
        std::sort(jobs.begin(), jobs.end());
        std::int64_t spt = 0;
        for (Minutes d : jobs) {
            t += d;
            spt += t;
        }
        ms = std::max(ms, t + min_after);
        if (spt > job_est_sum) best_sum = std::max(best_sum, sum_end - job_est_sum + spt);
    }
    const auto &w = m_.w;
    return w.makespan * ms + w.completion * best_sum + w.robots * units + w.reassignment * (reassign + m_.removed_reassign) +
           w.retiming * retime;
}

// Exact objective of a complete state; for replanning the timing is optimized for its sequencing.
std::int64_t Search::evaluate(const State &st, std::vector<Minutes> &starts) const {
    const auto &w = m_.w;
    starts = st.start;
    if (!m_.replan) {
        return w.makespan * st.max_end + w.completion * st.sum_end + w.robots * st.units_used;
    }
    std::vector<int> var(m_.n, -1);
    std::vector<int> tasks;
    for (int i : st.order) {
        var[i] = static_cast<int>(tasks.size());
        tasks.push_back(i);
    }
    const int k = static_cast<int>(tasks.size());
    detail::TimingProblem pr;
    pr.lower.resize(k + 1);
    pr.upper.resize(k + 1);
    pr.cost.resize(k + 1);
    Minutes frozen_end = 0;
    std::int64_t constant = w.robots * st.units_used + w.reassignment * (st.reassign + m_.removed_reassign);
    for (int i = 0; i < m_.n; ++i) {
        if (m_.frozen[i]) {
            frozen_end = std::max(frozen_end, st.end[i]);
            constant += w.completion * st.end[i];
        }
    }
    std::vector<Minutes> unit_frozen(m_.n_units, 0);
    for (int i = 0; i < m_.n; ++i) {
        if (!m_.frozen[i]) continue;
        for (int u = 0; u < m_.n_units; ++u) {
            if (st.team[i] >> u & 1) unit_frozen[u] = std::max(unit_frozen[u], st.end[i]);
        }
    }
    std::vector<int> last_on_unit(m_.n_units, -1);
    for (int v = 0; v < k; ++v) {
        const int i = tasks[v];
        Minutes lb = std::max(m_.release[i], m_.replan_time);
        for (int p : m_.preds[i]) {
            if (m_.frozen[p]) {
                lb = std::max(lb, st.end[p]);
            } else {
                pr.arcs.push_back({var[p], v, m_.dur[p]});
            }
        }
        for (int c : m_.conflicts[i]) {
            if (m_.frozen[c]) {
                lb = std::max(lb, st.end[c]);
            } else if (var[c] < v) {
                pr.arcs.push_back({var[c], v, m_.dur[c]});
            }
        }
        for (int u = 0; u < m_.n_units; ++u) {
            if (!(st.team[i] >> u & 1)) continue;
            lb = std::max(lb, unit_frozen[u]);
            if (last_on_unit[u] >= 0) pr.arcs.push_back({var[last_on_unit[u]], v, m_.dur[last_on_unit[u]]});
            last_on_unit[u] = i;
        }
        pr.lower[v] = lb;
        pr.upper[v] = m_.deadline[i] - m_.dur[i];
        pr.cost[v].linear = w.completion;
        pr.cost[v].abs_terms = {{w.retiming, m_.orig_start[i]}, {w.retiming, m_.orig_end[i] - m_.dur[i]}};
        constant += w.completion * m_.dur[i];
        pr.arcs.push_back({v, k, m_.dur[i]});
    }
    pr.lower[k] = frozen_end;
    pr.upper[k] = std::numeric_limits<Minutes>::max() / 4;
    pr.cost[k].linear = w.makespan;
    std::vector<Minutes> p(k + 1);
    for (int v = 0; v < k; ++v) p[v] = st.start[tasks[v]];
    p[k] = st.max_end;
    p = detail::minimize_timing(pr, std::move(p));
    for (int v = 0; v < k; ++v) starts[tasks[v]] = p[v];
    return constant + pr.objective(p);
}

void Search::offer(const State &st) {
    std::vector<Minutes> starts;
    const std::int64_t obj = evaluate(st, starts);
    bool better = !has_incumbent || obj < inc_obj;
    if (!better && obj == inc_obj) {
        if (starts != inc_start) {
            better = starts < inc_start;
        } else {
            better = st.team < inc_team;
        }
    }
    if (better) {
        has_incumbent = true;
        inc_obj = obj;
        inc_start = std::move(starts);
        inc_team = st.team;
    }
}

void Search::dfs(State &st) {
    ++stats.nodes;
    if (should_stop()) return;
    std::vector<Minutes> est;
    const std::int64_t lb = bound(st, est);
    if (lb == kNoBound) return;
    if (has_incumbent) {
        if (lb > inc_obj) return;
        if (limits_.gap > 0 && static_cast<double>(inc_obj - lb) <= limits_.gap * std::abs(static_cast<double>(inc_obj))) {
            if (lb < inc_obj) {
                gap_pruned = true;
                open_bound = std::min(open_bound, lb);
            }
            return;
        }
        if (lb == inc_obj && inc_start < est) return;
    }
    if (st.n_placed == m_.n) {
        offer(st);
        return;
    }

    // Tasks that could finish before a candidate start make that candidate a non-left-justified choice.
    Minutes finish_first = std::numeric_limits<Minutes>::max();
    std::vector<Minutes> base(m_.n, 0);
    std::vector<char> eligible(m_.n, 0);
    std::vector<std::vector<Minutes>> sorted_free(m_.n_types);
    for (int ty = 0; ty < m_.n_types; ++ty) {
        for (int u : m_.units_of_type[ty]) sorted_free[ty].push_back(st.free[u]);
        std::sort(sorted_free[ty].begin(), sorted_free[ty].end());
    }
    auto type_ready = [&](const TypeTeam &tt) {
        Minutes r = 0;
        for (int ty = 0; ty < m_.n_types; ++ty) {
            if (tt.per_type[ty] > 0) r = std::max(r, sorted_free[ty][tt.per_type[ty] - 1]);
        }
        return r;
    };
    for (int i = 0; i < m_.n; ++i) {
        if (st.placed[i]) continue;
        bool ready = true;
        for (int p : m_.preds[i]) ready = ready && st.placed[p];
        if (!ready) continue;
        base[i] = base_start(st, i);
        if (!m_.replan) {
            for (const auto &tt : m_.type_teams[i]) {
                if (tt.size != m_.min_team_size[i]) continue;
                finish_first = std::min(finish_first, std::max(base[i], type_ready(tt)) + m_.dur[i]);
            }
        }
        const int after = m_.placed_after[i];
        eligible[i] = after < 0 || st.placed[after];
    }
    if (!m_.replan && finish_first <= st.s_last) return;

    std::vector<Child> children;
    for (int i = 0; i < m_.n; ++i) {
        if (!eligible[i]) continue;
        auto admissible = [&](Minutes s) {
            if (s < st.s_last || (s == st.s_last && i < st.idx_last)) return false;
            if (s + m_.dur[i] > m_.deadline[i]) return false;
            return m_.replan || s < finish_first;
        };
        if (m_.replan) {
            for (std::size_t o = 0; o < m_.unit_teams[i].size(); ++o) {
                const auto &ut = m_.unit_teams[i][o];
                Minutes s = base[i];
                for (int u = 0; u < m_.n_units; ++u) {
                    if (ut.mask >> u & 1) s = std::max(s, st.free[u]);
                }
                if (admissible(s)) children.push_back({s, i, ut.mask, ut.size, o});
            }
        } else {
            for (std::size_t o = 0; o < m_.type_teams[i].size(); ++o) {
                const auto &tt = m_.type_teams[i][o];
                const Minutes s = std::max(base[i], type_ready(tt));
                if (!admissible(s)) continue;
                // Lowest-index units that are free by s.
                Mask mask = 0;
                for (int ty = 0; ty < m_.n_types; ++ty) {
                    int need = tt.per_type[ty];
                    for (int u : m_.units_of_type[ty]) {
                        if (need == 0) break;
                        if (st.free[u] <= s) {
                            mask |= Mask{1} << u;
                            --need;
                        }
                    }
                }
                children.push_back({s, i, mask, tt.size, o});
            }
        }
    }
    std::sort(children.begin(), children.end(), [&](const Child &a, const Child &b) {
        if (a.start != b.start) return a.start < b.start;
        if (m_.tail[a.task] != m_.tail[b.task]) return m_.tail[a.task] > m_.tail[b.task];
        if (a.size != b.size) return a.size < b.size;
        if (a.task != b.task) return a.task < b.task;
        return a.option < b.option;
    });
    stack_lb_.push_back(lb);
    for (const auto &c : children) {
        State next = st;
        place(next, c.task, c.start, c.mask);
        dfs(next);
        if (aborted) break;
    }
    if (aborted) open_bound = std::min(open_bound, *std::min_element(stack_lb_.begin(), stack_lb_.end()));
    stack_lb_.pop_back();
}

void Search::run(State root) { dfs(root); }

// Serial schedule generation used to seed the incumbent.
bool Search::greedy(State st, bool by_tail, bool keep_original) {
    while (st.n_placed < m_.n) {
        int pick = -1;
        Minutes pick_start = 0;
        Mask pick_mask = 0;
        std::int64_t pick_key_a = 0, pick_key_b = 0;
        for (int i = 0; i < m_.n; ++i) {
            if (st.placed[i]) continue;
            bool ready = true;
            for (int p : m_.preds[i]) ready = ready && st.placed[p];
            if (!ready) continue;
            const Minutes base = base_start(st, i);
            Minutes best_s = std::numeric_limits<Minutes>::max();
            Mask best_mask = 0;
            std::int64_t best_penalty = 0;
            if (m_.replan) {
                for (const auto &ut : m_.unit_teams[i]) {
                    Minutes s = base;
                    for (int u = 0; u < m_.n_units; ++u) {
                        if (ut.mask >> u & 1) s = std::max(s, st.free[u]);
                    }
                    const std::int64_t penalty = keep_original ? ut.reassign : 0;
                    if (s < best_s || (s == best_s && penalty < best_penalty)) {
                        best_s = s;
                        best_mask = ut.mask;
                        best_penalty = penalty;
                    }
                }
            } else {
                for (const auto &tt : m_.type_teams[i]) {
                    std::vector<std::pair<Minutes, int>> cand;
                    Minutes s = base;
                    Mask mask = 0;
                    for (int ty = 0; ty < m_.n_types; ++ty) {
                        if (tt.per_type[ty] == 0) continue;
                        cand.clear();
                        for (int u : m_.units_of_type[ty]) cand.push_back({st.free[u], u});
                        std::sort(cand.begin(), cand.end());
                        for (int q = 0; q < tt.per_type[ty]; ++q) {
                            s = std::max(s, cand[q].first);
                            mask |= Mask{1} << cand[q].second;
                        }
                    }
                    if (s < best_s) {
                        best_s = s;
                        best_mask = mask;
                    }
                }
            }
            if (best_s == std::numeric_limits<Minutes>::max()) return false;
            const std::int64_t a = by_tail ? -m_.tail[i] : best_s;
            const std::int64_t b = by_tail ? best_s : -m_.tail[i];
            if (pick < 0 || a < pick_key_a || (a == pick_key_a && b < pick_key_b)) {
                pick = i;
                pick_start = best_s;
                pick_mask = best_mask;
                pick_key_a = a;
                pick_key_b = b;
            }
        }
        if (pick < 0 || pick_start + m_.dur[pick] > m_.deadline[pick]) return false;
        place(st, pick, pick_start, pick_mask);
    }
    offer(st);
    return true;
}

// Replays the original plan's sequence and units where they still exist.
void Search::original_order(State st) {
    std::vector<int> order;
    for (int i = 0; i < m_.n; ++i) {
        if (!st.placed[i]) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return m_.orig_start[a] < m_.orig_start[b]; });
    std::vector<char> done(m_.n, 0);
    // Respect updated precedences: repeatedly take the first ready task in original order.
    for (std::size_t placed = 0; placed < order.size(); ++placed) {
        int pick = -1;
        for (int i : order) {
            if (done[i]) continue;
            bool ready = true;
            for (int p : m_.preds[i]) ready = ready && st.placed[p];
            if (ready) {
                pick = i;
                break;
            }
        }
        if (pick < 0) return;
        const Minutes base = base_start(st, pick);
        const UnitTeam *team = nullptr;
        Minutes best_s = std::numeric_limits<Minutes>::max();
        for (const auto &ut : m_.unit_teams[pick]) {
            Minutes s = base;
            for (int u = 0; u < m_.n_units; ++u) {
                if (ut.mask >> u & 1) s = std::max(s, st.free[u]);
            }
            if (!team || ut.reassign < team->reassign || (ut.reassign == team->reassign && s < best_s)) {
                team = &ut;
                best_s = s;
            }
        }
        if (!team || best_s + m_.dur[pick] > m_.deadline[pick]) return;
        done[pick] = 1;
        place(st, pick, best_s, team->mask);
    }
    offer(st);
}

Plan make_plan(const IntegerProgram &prog, const Search &search) {
    Plan plan;
    const auto &inst = prog.instance;
    for (std::size_t i = 0; i < inst.tasks.size(); ++i) {
        TaskAssignment a;
        a.task = inst.tasks[i].id;
        a.start = search.inc_start[i];
        a.end = a.start + inst.tasks[i].duration;
        for (std::size_t u = 0; u < prog.units.size(); ++u) {
            if (search.inc_team[i] >> u & 1) a.robots.push_back(prog.units[u].id);
        }
        std::sort(a.robots.begin(), a.robots.end());
        plan.makespan = std::max(plan.makespan, a.end);
        plan.tasks.push_back(std::move(a));
    }
    plan.objective = search.inc_obj;
    return plan;
}

} // namespace

std::pair<Plan, SolveStats> solve(const IntegerProgram &program, const SolveLimits &limits) {
    if (!(limits.time_seconds > 0) || limits.node_budget == 0 || limits.gap < 0) {
        throw Error(ErrorCode::BudgetZero, "solve limits must be positive");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const Compiled m = compile(program);
    Search search(m, limits);
    const State root = search.initial_state();
    if (m.replan) {
        search.original_order(root);
        search.greedy(root, true, true);
        search.greedy(root, false, true);
    } else {
        search.greedy(root, true, false);
        search.greedy(root, false, false);
    }
    search.run(root);

    SolveStats stats = search.stats;
    stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    Plan plan;
    if (!search.has_incumbent) {
        plan.status = search.aborted ? SolveStatus::Unknown : SolveStatus::Infeasible;
        stats.status = plan.status;
        stats.best_bound = 0;
        stats.incumbent = 0;
        return {plan, stats};
    }
    plan = make_plan(program, search);
    stats.incumbent = search.inc_obj;
    const bool open = search.aborted || search.gap_pruned;
    stats.best_bound = open ? std::min(search.open_bound, search.inc_obj) : search.inc_obj;
    plan.status = open && stats.best_bound < search.inc_obj ? SolveStatus::FeasibleWithGap : SolveStatus::Optimal;
    plan.gap = plan.status == SolveStatus::Optimal
                   ? 0.0
                   : static_cast<double>(search.inc_obj - stats.best_bound) /
                         std::max<double>(1.0, std::abs(static_cast<double>(search.inc_obj)));
    stats.status = plan.status;
    return {plan, stats};
}

std::pair<Plan, SolveStats> solve_instance(const ProblemInstance &instance, const SolveLimits &limits) {
    return solve(build_program(instance), limits);
}

Json stats_to_json(const SolveStats &stats) {
    Json j = Json::object();
    j["nodes"] = stats.nodes;
    j["seconds"] = stats.seconds;
    j["best_bound"] = stats.best_bound;
    j["incumbent"] = stats.incumbent;
    j["status"] = std::string(to_string(stats.status));
    j["time_limit_hit"] = stats.time_limit_hit;
    j["node_limit_hit"] = stats.node_limit_hit;
    j["stopped"] = stats.stopped;
    return j;
}

} // namespace forecrew
