#pragma once

#include <cstdint>
#include <vector>

#include "forecrew/model.hpp"

namespace forecrew::detail {

/// Integer points p with lower[v] <= p[v] <= upper[v] and p[to] >= p[from] + lag for every arc,
/// minimizing a sum of separable convex piecewise-linear costs.
struct TimingProblem {
    struct Arc {
        int from = 0;
        int to = 0;
        Minutes lag = 0;
    };
    /// cost(p) = linear * p + sum_k abs_weight[k] * |p - abs_point[k]|
    struct Cost {
        std::int64_t linear = 0;
        std::vector<std::pair<std::int64_t, Minutes>> abs_terms;
        [[nodiscard]] std::int64_t operator()(Minutes p) const;
    };

    std::vector<Minutes> lower, upper;
    std::vector<Arc> arcs;
    std::vector<Cost> cost;

    [[nodiscard]] std::int64_t objective(const std::vector<Minutes> &p) const;
    [[nodiscard]] bool feasible(const std::vector<Minutes> &p) const;
};

/// Steepest descent from a feasible start; each step solves a minimum closure by max-flow.
/// The result is a global minimizer because the objective is L-natural convex.
std::vector<Minutes> minimize_timing(const TimingProblem &problem, std::vector<Minutes> start);

} // namespace forecrew::detail
