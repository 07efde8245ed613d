#pragma once

#include "phesopt/types.hpp"

#include <utility>

namespace phes {

enum class Relation { LE, EQ, GE };

struct LpRow {
    std::vector<std::pair<int, double>> coeffs; // sparse (index, value)
    Relation rel = Relation::LE;
    double rhs = 0.0;
};

// Canonical maximization problem with per-variable bounds.
struct LpProblem {
    int n_vars = 0;
    Series objective;                              // length n_vars
    std::vector<LpRow> rows;
    std::vector<std::pair<double, double>> var_bounds; // default [0, +inf)

    int add_var(double lower = 0.0, double upper = kInf, double cost = 0.0) {
        objective.push_back(cost);
        var_bounds.push_back({lower, upper});
        return n_vars++;
    }
    void add_row(std::vector<std::pair<int, double>> coeffs, Relation rel, double rhs) {
        rows.push_back({std::move(coeffs), rel, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    Series x;
    double objective_value = 0.0;
    long iterations = 0;
    // status == Infeasible: residual phase-one artificial sum (> tolerance).
    double infeasibility = 0.0;
    // status == Unbounded: index of the improving nonbasic variable.
    int unbounded_ray = -1;
};

struct LpOptions {
    double feas_tol = 1e-7;
    int stall_threshold = 1000; // pivots without improvement before Bland's rule
    long max_iterations = 2000000;
};

// Throws std::invalid_argument on a malformed problem, std::runtime_error if the
// iteration cap is hit.
LpSolution solve_lp(const LpProblem& p, const LpOptions& opts = {});

void validate_lp(const LpProblem& p);

// Debug text format (round-trips through parse_lp_dump).
std::string dump_lp(const LpProblem& p, const std::vector<int>& binary_vars = {});
std::pair<LpProblem, std::vector<int>> parse_lp_dump(const std::string& text);

} // namespace phes
