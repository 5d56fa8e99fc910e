#include "timing.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace forecrew::detail {

std::int64_t TimingProblem::Cost::operator()(Minutes p) const {
    std::int64_t v = linear * p;
    for (const auto &[w, a] : abs_terms) {
        v += w * (p > a ? p - a : a - p);
    }
    return v;
}

std::int64_t TimingProblem::objective(const std::vector<Minutes> &p) const {
    std::int64_t v = 0;
    for (std::size_t i = 0; i < p.size(); ++i) v += cost[i](p[i]);
    return v;
}

bool TimingProblem::feasible(const std::vector<Minutes> &p) const {
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < lower[i] || p[i] > upper[i]) return false;
    }
    for (const auto &a : arcs) {
        if (p[a.to] < p[a.from] + a.lag) return false;
    }
    return true;
}

namespace {

constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

// Edmonds-Karp on a dense capacity matrix; returns the flow value and leaves the residual in cap.
std::int64_t max_flow(std::vector<std::vector<std::int64_t>> &cap, int s, int t) {
    const int n = static_cast<int>(cap.size());
    std::int64_t flow = 0;
    std::vector<int> parent(n);
    while (true) {
        std::fill(parent.begin(), parent.end(), -1);
        parent[s] = s;
        std::queue<int> q;
        q.push(s);
        while (!q.empty() && parent[t] < 0) {
            int u = q.front();
            q.pop();
            for (int v = 0; v < n; ++v) {
                if (parent[v] < 0 && cap[u][v] > 0) {
                    parent[v] = u;
                    q.push(v);
                }
            }
        }
        if (parent[t] < 0) return flow;
        std::int64_t aug = kInf;
        for (int v = t; v != s; v = parent[v]) aug = std::min(aug, cap[parent[v]][v]);
        for (int v = t; v != s; v = parent[v]) {
            cap[parent[v]][v] -= aug;
            cap[v][parent[v]] += aug;
        }
        flow += aug;
    }
}

// Minimum-weight closed set for a unit step in direction dir; returns (weight, members).
std::pair<std::int64_t, std::vector<char>> best_step(const TimingProblem &pr, const std::vector<Minutes> &p, int dir) {
    const int n = static_cast<int>(p.size());
    const int s = n, t = n + 1;
    std::vector<std::vector<std::int64_t>> cap(n + 2, std::vector<std::int64_t>(n + 2, 0));
    std::int64_t negative = 0;
    for (int v = 0; v < n; ++v) {
        const bool blocked = dir > 0 ? p[v] >= pr.upper[v] : p[v] <= pr.lower[v];
        if (blocked) {
            cap[v][t] = kInf;
            continue;
        }
        const std::int64_t w = pr.cost[v](p[v] + dir) - pr.cost[v](p[v]);
        if (w < 0) {
            cap[s][v] += -w;
            negative += w;
        } else if (w > 0) {
            cap[v][t] += w;
        }
    }
    for (const auto &a : pr.arcs) {
        if (p[a.to] != p[a.from] + a.lag) continue;
        // Moving `from` up drags `to` with it; moving `to` down drags `from`.
        if (dir > 0) {
            cap[a.from][a.to] = kInf;
        } else {
            cap[a.to][a.from] = kInf;
        }
    }
    const std::int64_t flow = max_flow(cap, s, t);
    const std::int64_t value = negative + flow;
    std::vector<char> in(n, 0);
    if (value >= 0) return {value, in};
    std::vector<char> seen(n + 2, 0);
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (int v = 0; v < n + 2; ++v) {
            if (!seen[v] && cap[u][v] > 0) {
                seen[v] = 1;
                q.push(v);
            }
        }
    }
    for (int v = 0; v < n; ++v) in[v] = seen[v];
    return {value, in};
}

std::vector<Minutes> shifted(const std::vector<Minutes> &p, const std::vector<char> &in, Minutes step) {
    std::vector<Minutes> out = p;
    for (std::size_t v = 0; v < p.size(); ++v) {
        if (in[v]) out[v] += step;
    }
    return out;
}

} // namespace

std::vector<Minutes> minimize_timing(const TimingProblem &problem, std::vector<Minutes> p) {
    if (p.empty()) return p;
    std::int64_t current = problem.objective(p);
    while (true) {
        auto up = best_step(problem, p, +1);
        auto down = best_step(problem, p, -1);
        if (up.first >= 0 && down.first >= 0) break;
        const bool use_up = up.first <= down.first;
        const auto &members = use_up ? up.second : down.second;
        const Minutes dir = use_up ? 1 : -1;
        Minutes step = 1;
        auto next = shifted(p, members, dir);
        std::int64_t next_value = problem.objective(next);
        // Longer strides along the same direction while they keep improving.
        while (true) {
            auto further = shifted(p, members, dir * step * 2);
            if (!problem.feasible(further)) break;
            const std::int64_t v = problem.objective(further);
            if (v >= next_value) break;
            step *= 2;
            next = std::move(further);
            next_value = v;
        }
        if (next_value >= current) break;
        p = std::move(next);
        current = next_value;
    }
    return p;
}

} // namespace forecrew::detail
