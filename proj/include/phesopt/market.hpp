#pragma once

#include "phesopt/milp.hpp"
#include "phesopt/types.hpp"

namespace phes {

// Variable layout for one scenario's problem. Index -1 marks an absent
// variable (storage disabled).
struct VarIndexMap {
    std::vector<int> p_sold, p_bought, p_curtail, u_dp1;
    std::vector<int> p_pump, p_release, q_pump, q_release, v_upper, v_lower, u_ps, u_dp2;
    int n_vars = 0;
    bool storage = false;
};

struct ScenarioDispatch {
    Series sold, bought, curtail;            // MW, length T
    Series pump, release;                    // MW, length T (zero when storage off)
    Series q_pump, q_release;                // Hm3/h
    Series v_upper, v_lower;                 // Hm3, end-of-step volumes
    double profit = 0.0;                     // TL, actual prices
    long nodes = 0;
    double gap = 0.0;
    bool optimal = true;
};

struct DispatchSolution {
    std::vector<ScenarioDispatch> scenarios;
    double objective_value = 0.0; // TL, summed solver objectives over scenarios
    double mean_profit = 0.0;     // TL, scenario mean of evaluated profit
};

struct ProfitBreakdown {
    double total = 0.0; // scenario mean
    Series per_scenario;
};

// Assembles the per-scenario MILP. Storage variables and their constraints are
// included only when config.storage_enabled.
std::pair<MilpProblem, VarIndexMap> build_milp(const ProblemInstance& inst, int s);

// Balancing prices as seen by the solver objective: actual series when
// price-aware, per-scenario time averages when price-blind.
std::pair<Series, Series> objective_prices(const ProblemInstance& inst, int s);

// Rule-based price-blind dispatcher (Case 3 default mode).
ScenarioDispatch greedy_dispatch(const ProblemInstance& inst, int s);

// De-indexes a solver result and re-derives volumes from flows; throws on
// balance or exclusivity breaches (solver bugs must surface).
ScenarioDispatch extract_solution(const MilpSolution& ms, const VarIndexMap& map,
                                  const ProblemInstance& inst, int s);

double evaluate_scenario_profit(const ScenarioDispatch& d, const ProblemInstance& inst, int s);
ProfitBreakdown evaluate_profit(const DispatchSolution& d, const ProblemInstance& inst);

// Solves every scenario (concurrently) and merges results in scenario order.
DispatchSolution solve_all_scenarios(const ProblemInstance& inst, const MilpOptions& opts);

} // namespace phes
