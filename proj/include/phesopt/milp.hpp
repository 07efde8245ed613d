#pragma once

#include "phesopt/lp.hpp"

namespace phes {

struct MilpProblem {
    LpProblem lp;
    std::vector<int> binary_vars; // forced to bounds within [0,1]
};

enum class MilpStatus { Optimal, Infeasible, TimeLimitBest };

struct MilpSolution {
    MilpStatus status = MilpStatus::Infeasible;
    Series x;
    double objective_value = 0.0;
    long nodes_explored = 0;
    double gap = 0.0; // relative bound gap of the returned incumbent
    bool has_incumbent = false;
};

struct MilpOptions {
    double time_limit_sec = 60.0;
    long node_limit = 200000;
    double integrality_tol = 1e-6;
    LpOptions lp;
    // When set, (parent_bound, child_bound) pairs are appended per explored child.
    std::vector<std::pair<double, double>>* bound_trace = nullptr;
};

// Best-first branch and bound on the LP relaxation; branches on the most
// fractional binary, lowest index on ties.
MilpSolution solve_milp(const MilpProblem& p, const MilpOptions& opts = {});

// Exhaustive 2^k enumeration, k <= 20. Test oracle only.
MilpSolution solve_milp_bruteforce(const MilpProblem& p, const LpOptions& lp_opts = {});

void validate_milp(const MilpProblem& p);

} // namespace phes
