#include "phesopt/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>

namespace phes {

void validate_milp(const MilpProblem& p) {
    validate_lp(p.lp);
    for (int j : p.binary_vars) {
        if (j < 0 || j >= p.lp.n_vars)
            throw std::invalid_argument("binary variable index " + std::to_string(j) +
                                        " out of range");
        auto [lo, hi] = p.lp.var_bounds[static_cast<size_t>(j)];
        if (lo < -1e-12 || hi > 1.0 + 1e-12)
            throw std::invalid_argument("binary variable " + std::to_string(j) +
                                        " has bounds outside [0,1]");
    }
}

namespace {

struct Node {
    double bound;                             // LP relaxation objective (upper bound)
    std::vector<std::pair<int, int>> fixings; // (binary index, 0 or 1)
    long seq;                                 // creation order, deterministic tie-break
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound < b.bound; // max-heap on bound
        return a.seq < b.seq; // ties: dive into the newest node first
    }
};

int most_fractional(const Series& x, const std::vector<int>& binaries, double tol) {
    int pick = -1;
    double best = tol;
    for (int j : binaries) {
        double v = x[static_cast<size_t>(j)];
        double frac = std::min(v - std::floor(v), std::ceil(v) - v);
        if (frac > best + 1e-15) {
            best = frac;
            pick = j;
        }
    }
    return pick;
}

} // namespace

MilpSolution solve_milp(const MilpProblem& p, const MilpOptions& opts) {
    validate_milp(p);
    const auto t_start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    };

    MilpSolution best;
    best.status = MilpStatus::Infeasible;

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    long seq = 0;

    auto solve_node = [&](const std::vector<std::pair<int, int>>& fixings) {
        LpProblem lp = p.lp;
        for (int j : p.binary_vars) {
            auto& b = lp.var_bounds[static_cast<size_t>(j)];
            b.first = std::max(b.first, 0.0);
            b.second = std::min(b.second, 1.0);
        }
        for (auto [j, v] : fixings)
            lp.var_bounds[static_cast<size_t>(j)] = {double(v), double(v)};
        return solve_lp(lp, opts.lp);
    };

    MilpSolution out;
    double incumbent = -kInf;
    Series incumbent_x;
    bool limits_hit = false;

    // Rows touching each binary, for the rounding repair below.
    std::vector<std::vector<std::pair<int, double>>> bin_rows(
        static_cast<size_t>(p.lp.n_vars));
    std::vector<char> is_bin(static_cast<size_t>(p.lp.n_vars), 0);
    for (int j : p.binary_vars) is_bin[static_cast<size_t>(j)] = 1;
    for (size_t i = 0; i < p.lp.rows.size(); ++i)
        for (auto [j, a] : p.lp.rows[i].coeffs)
            if (is_bin[static_cast<size_t>(j)])
                bin_rows[static_cast<size_t>(j)].push_back({int(i), a});

    // Indicator binaries often sit fractional at a vertex even though the
    // quantities they guard are already consistent. Rounding them at no
    // objective cost (and without breaking any row) turns such a relaxation
    // into an integral optimum and avoids branching entirely.
    auto try_repair = [&](const LpSolution& relax) -> bool {
        Series x = relax.x;
        std::vector<double> act(p.lp.rows.size(), 0.0);
        for (size_t i = 0; i < p.lp.rows.size(); ++i)
            for (auto [j, a] : p.lp.rows[i].coeffs)
                act[i] += a * x[static_cast<size_t>(j)];
        const double row_tol = 10.0 * opts.lp.feas_tol;
        bool all_fixed = true;
        for (int j : p.binary_vars) {
            double v = x[static_cast<size_t>(j)];
            int nearest = static_cast<int>(std::lround(v));
            int order[2] = {nearest, 1 - nearest};
            if (std::abs(nearest - v) <= opts.integrality_tol) order[1] = order[0];
            bool fixed = false;
            for (int k = 0; k < 2 && !fixed; ++k) {
                double target = double(order[k]);
                double delta = target - v;
                if (p.lp.objective[static_cast<size_t>(j)] * delta < -1e-12) continue;
                auto [lo, hi] = p.lp.var_bounds[static_cast<size_t>(j)];
                if (target < lo - 1e-12 || target > hi + 1e-12) continue;
                bool ok = true;
                for (auto [i, a] : bin_rows[static_cast<size_t>(j)]) {
                    double na = act[static_cast<size_t>(i)] + a * delta;
                    const LpRow& row = p.lp.rows[static_cast<size_t>(i)];
                    if (row.rel != Relation::GE && na > row.rhs + row_tol) ok = false;
                    if (row.rel != Relation::LE && na < row.rhs - row_tol) ok = false;
                    if (!ok) break;
                }
                if (!ok) continue;
                for (auto [i, a] : bin_rows[static_cast<size_t>(j)])
                    act[static_cast<size_t>(i)] += a * delta;
                x[static_cast<size_t>(j)] = target;
                fixed = true;
            }
            if (!fixed) all_fixed = false;
        }
        if (!all_fixed) return false;
        double obj = 0.0;
        for (int j = 0; j < p.lp.n_vars; ++j)
            obj += p.lp.objective[static_cast<size_t>(j)] * x[static_cast<size_t>(j)];
        if (obj > incumbent + 1e-12) {
            incumbent = obj;
            incumbent_x = x;
        }
        return true;
    };

    open.push({kInf, {}, seq++});

    while (!open.empty()) {
        if (out.nodes_explored >= opts.node_limit || elapsed() > opts.time_limit_sec) {
            limits_hit = true;
            break;
        }
        Node node = open.top();
        open.pop();
        if (node.bound <= incumbent + 1e-9) continue; // pruned by bound

        LpSolution relax = solve_node(node.fixings);
        ++out.nodes_explored;
        if (relax.status == LpStatus::Unbounded)
            throw std::runtime_error("MILP relaxation is unbounded");
        if (opts.bound_trace && !node.fixings.empty())
            opts.bound_trace->push_back({node.bound, relax.status == LpStatus::Optimal
                                                         ? relax.objective_value
                                                         : -kInf});
        if (relax.status != LpStatus::Optimal) continue;
        if (relax.objective_value <= incumbent + 1e-9) continue;

        int branch = most_fractional(relax.x, p.binary_vars, opts.integrality_tol);
        if (branch < 0) {
            if (relax.objective_value > incumbent + 1e-12) {
                incumbent = relax.objective_value;
                incumbent_x = relax.x;
            }
            continue;
        }
        if (try_repair(relax)) continue; // incumbent matches this node's bound
        for (int v : {0, 1}) {
            Node child;
            child.bound = relax.objective_value;
            child.fixings = node.fixings;
            child.fixings.push_back({branch, v});
            child.seq = seq++;
            open.push(child);
        }
    }

    if (incumbent == -kInf && limits_hit) {
        // Rounding dive so a limit-hit solve still returns something usable:
        // fix binaries greedily along one root-to-leaf path.
        std::vector<std::pair<int, int>> fixings;
        while (true) {
            LpSolution relax = solve_node(fixings);
            if (relax.status != LpStatus::Optimal) break;
            int branch = most_fractional(relax.x, p.binary_vars, opts.integrality_tol);
            if (branch < 0) {
                incumbent = relax.objective_value;
                incumbent_x = relax.x;
                break;
            }
            double v = relax.x[static_cast<size_t>(branch)];
            fixings.push_back({branch, v >= 0.5 ? 1 : 0});
        }
    }

    if (incumbent > -kInf) {
        out.has_incumbent = true;
        out.x = incumbent_x;
        // Snap near-integral binaries exactly.
        for (int j : p.binary_vars)
            out.x[static_cast<size_t>(j)] = std::round(out.x[static_cast<size_t>(j)]);
        out.objective_value = incumbent;
        double remaining_bound = incumbent;
        if (limits_hit) {
            // The best open bound limits the provable gap.
            remaining_bound = open.empty() ? incumbent : std::max(incumbent, open.top().bound);
        }
        out.gap = (remaining_bound - incumbent) / std::max(1.0, std::abs(incumbent));
        out.status = limits_hit && out.gap > 1e-6 ? MilpStatus::TimeLimitBest : MilpStatus::Optimal;
    } else if (limits_hit) {
        out.status = MilpStatus::TimeLimitBest;
        out.has_incumbent = false;
        out.gap = kInf;
    } else {
        out.status = MilpStatus::Infeasible;
    }
    return out;
}

MilpSolution solve_milp_bruteforce(const MilpProblem& p, const LpOptions& lp_opts) {
    validate_milp(p);
    const size_t k = p.binary_vars.size();
    if (k > 20)
        throw std::invalid_argument("brute-force refuses more than 20 binaries, got " +
                                    std::to_string(k));
    MilpSolution out;
    out.status = MilpStatus::Infeasible;
    double best = -kInf;
    for (uint64_t mask = 0; mask < (uint64_t(1) << k); ++mask) {
        LpProblem lp = p.lp;
        for (size_t i = 0; i < k; ++i) {
            double v = (mask >> i) & 1 ? 1.0 : 0.0;
            lp.var_bounds[static_cast<size_t>(p.binary_vars[i])] = {v, v};
        }
        LpSolution s = solve_lp(lp, lp_opts);
        ++out.nodes_explored;
        if (s.status == LpStatus::Optimal && s.objective_value > best) {
            best = s.objective_value;
            out.x = s.x;
            out.objective_value = s.objective_value;
            out.has_incumbent = true;
            out.status = MilpStatus::Optimal;
        }
    }
    return out;
}

} // namespace phes
