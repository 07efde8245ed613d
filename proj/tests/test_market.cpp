#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phesopt/market.hpp"

#include <cmath>

using namespace phes;

namespace {

// Two-hour fixture where pumping the hour-1 surplus and selling it back in
// hour 2 is the unique optimum: the upper reservoir starts empty (at its
// minimum), so every released drop must first be pumped.
ProblemInstance arbitrage_instance(int case_id) {
    ProblemInstance inst;
    inst.grid = TimeGrid{2, 1, 1.0, 1.0};
    inst.phes = PhesParams{};
    inst.phes.v_upper_init = 10.0; // == v_upper_min
    inst.phes.v_lower_init = 90.0;
    inst.wind.power = Matrix(1, 2, 2.0);
    inst.wind.base_power = {2.0, 2.0};
    inst.prices.dayahead = {100.0, 100.0};
    inst.prices.balancing_sell = Matrix(1, 2);
    inst.prices.balancing_sell.at(0, 0) = 10.0;
    inst.prices.balancing_sell.at(0, 1) = 200.0;
    inst.prices.balancing_buy = inst.prices.balancing_sell;
    inst.schedule.power = {1.0, 1.0};
    inst.config = CaseConfig::for_case(case_id);
    inst.wind_capacity = 3.0;
    return inst;
}

ProblemInstance storage_instance(int hours, int scenarios) {
    ProblemInstance inst;
    inst.grid = TimeGrid{hours, 1, 1.0, 1.0};
    inst.phes = PhesParams{};
    inst.wind.power = Matrix(scenarios, hours, 1.0);
    inst.wind.base_power = Series(static_cast<size_t>(hours), 1.0);
    inst.prices.dayahead = Series(static_cast<size_t>(hours), 100.0);
    inst.prices.balancing_sell = Matrix(scenarios, hours, 50.0);
    inst.prices.balancing_buy = Matrix(scenarios, hours, 50.0);
    inst.schedule.power = Series(static_cast<size_t>(hours), 1.0);
    inst.config = CaseConfig::for_case(4);
    inst.wind_capacity = 3.0;
    return inst;
}

ScenarioDispatch solve_one(const ProblemInstance& inst, int s) {
    auto [mp, map] = build_milp(inst, s);
    MilpSolution ms = solve_milp(mp);
    REQUIRE(ms.status == MilpStatus::Optimal);
    return extract_solution(ms, map, inst, s);
}

} // namespace

TEST_CASE("storage-off problem size") {
    ProblemInstance inst = arbitrage_instance(1);
    auto [mp, map] = build_milp(inst, 0);
    CHECK(mp.lp.n_vars == 8); // {sold, bought, curtail, u_dp1} per step
    CHECK(mp.lp.rows.size() == 6); // balance + buy/sell pair per step
    CHECK(mp.binary_vars.size() == 2);
    CHECK(map.p_pump[0] == -1);
    CHECK(map.v_upper[1] == -1);
}

TEST_CASE("storage-on problem size and restoration row") {
    ProblemInstance inst = arbitrage_instance(4);
    auto [mp, map] = build_milp(inst, 0);
    CHECK(mp.lp.n_vars == 24);
    CHECK(mp.lp.rows.size() == 22);
    CHECK(mp.binary_vars.size() == 6);

    inst.config.restore_lower_reservoir = true;
    auto [mp2, map2] = build_milp(inst, 0);
    CHECK(mp2.lp.rows.size() == 23);
}

TEST_CASE("first-step volume row anchors on the initial volumes") {
    ProblemInstance inst = arbitrage_instance(4);
    auto [mp, map] = build_milp(inst, 0);
    // With no flows the first step's upper volume equals the initial fill.
    bool found = false;
    for (const auto& row : mp.lp.rows) {
        if (row.rel != Relation::EQ || row.coeffs.empty()) continue;
        if (row.coeffs[0].first == map.v_upper[0] && row.coeffs[0].second == 1.0 &&
            row.coeffs.size() == 3) {
            CHECK(row.rhs == inst.phes.v_upper_init);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("flow-to-power coupling at the flow ceiling") {
    // Deficit far beyond turbine capability: release saturates at
    // sigma_release * q_max = 0.8 * 20 = 16 MW, the rest is bought.
    ProblemInstance inst = storage_instance(1, 1);
    inst.schedule.power = {30.0};
    inst.wind.power.at(0, 0) = 0.0;
    inst.wind.base_power = {0.0};
    inst.config = CaseConfig::for_case(3);
    ScenarioDispatch d = greedy_dispatch(inst, 0);
    CHECK(d.q_release[0] == doctest::Approx(20.0));
    CHECK(d.release[0] == doctest::Approx(16.0));
    CHECK(d.bought[0] == doctest::Approx(14.0));
}

TEST_CASE("objective prices flatten only in price-blind mode") {
    ProblemInstance inst = storage_instance(4, 1);
    inst.prices.balancing_sell.at(0, 0) = 10.0;
    inst.prices.balancing_sell.at(0, 1) = 20.0;
    inst.prices.balancing_sell.at(0, 2) = 30.0;
    inst.prices.balancing_sell.at(0, 3) = 40.0;
    inst.prices.balancing_buy = inst.prices.balancing_sell;

    inst.config.price_aware = true;
    auto [sell_aware, buy_aware] = objective_prices(inst, 0);
    CHECK(sell_aware == inst.prices.balancing_sell.row(0));

    inst.config.price_aware = false;
    auto [sell_blind, buy_blind] = objective_prices(inst, 0);
    for (double v : sell_blind) CHECK(v == doctest::Approx(25.0));
    for (double v : buy_blind) CHECK(v == doctest::Approx(25.0));
}

TEST_CASE("greedy dispatch rule traces") {
    ProblemInstance inst = storage_instance(1, 1);
    inst.config = CaseConfig::for_case(3);

    SUBCASE("deficit covered by release") {
        inst.wind.power.at(0, 0) = 1.0;
        inst.schedule.power = {2.0};
        ScenarioDispatch d = greedy_dispatch(inst, 0);
        CHECK(d.q_release[0] == doctest::Approx(1.25));
        CHECK(d.release[0] == doctest::Approx(1.0));
        CHECK(d.bought[0] == doctest::Approx(0.0));
    }
    SUBCASE("uncapped surplus is sold") {
        inst.wind.power.at(0, 0) = 2.0;
        inst.schedule.power = {1.0};
        ScenarioDispatch d = greedy_dispatch(inst, 0);
        CHECK(d.sold[0] == doctest::Approx(1.0));
        CHECK(d.pump[0] == doctest::Approx(0.0));
    }
    SUBCASE("capped surplus spills into the pump") {
        inst.wind.power.at(0, 0) = 2.0;
        inst.schedule.power = {1.0};
        inst.config.extended_constraints = true;
        inst.config.sell_cap_peak = 0.5;
        inst.config.sell_cap_offpeak = 0.5;
        ScenarioDispatch d = greedy_dispatch(inst, 0);
        CHECK(d.sold[0] == doctest::Approx(0.5));
        CHECK(d.pump[0] == doctest::Approx(0.5));
        CHECK(d.q_pump[0] == doctest::Approx(0.5 / 1.2));
        CHECK(d.curtail[0] == doctest::Approx(0.0));
    }
}

TEST_CASE("extraction guard rejects an unbalanced solution") {
    ProblemInstance inst = arbitrage_instance(1);
    auto [mp, map] = build_milp(inst, 0);
    MilpSolution fake;
    fake.has_incumbent = true;
    fake.status = MilpStatus::Optimal;
    fake.x.assign(static_cast<size_t>(mp.lp.n_vars), 0.0); // wind surplus unaccounted
    CHECK_THROWS_AS(extract_solution(fake, map, inst, 0), std::runtime_error);
}

TEST_CASE("two-step arbitrage fixture") {
    // Independent oracle: scan the pump volume q1 and release volume q2 <= q1
    // on a fine grid. Hour-1 surplus limits pumping; the empty upper reservoir
    // limits release to what was pumped.
    double best = -1e18;
    const double q1_max = 1.0 / 1.2; // surplus / sigma_pump
    const int N = 2000;
    for (int i = 0; i <= N; ++i) {
        double q1 = q1_max * i / N;
        for (int j = 0; j <= i; ++j) {
            double q2 = q1_max * j / N;
            double profit = 200.0 // day-ahead
                            + (1.0 - 1.2 * q1) * 10.0 // hour-1 leftover surplus
                            + (1.0 + 0.8 * q2) * 200.0; // hour-2 surplus + release
            best = std::max(best, profit);
        }
    }
    CHECK(best == doctest::Approx(533.33).epsilon(1e-4));

    ProblemInstance inst4 = arbitrage_instance(4);
    ScenarioDispatch d4 = solve_one(inst4, 0);
    CHECK(std::abs(d4.profit - 533.33) < 0.01);
    CHECK(d4.profit == doctest::Approx(best).epsilon(1e-6));
    CHECK(d4.pump[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(d4.pump[1] == doctest::Approx(0.0));
    CHECK(d4.release[0] == doctest::Approx(0.0));
    CHECK(d4.release[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(d4.sold[1] == doctest::Approx(1.0 + 2.0 / 3.0).epsilon(1e-6));

    ProblemInstance inst1 = arbitrage_instance(1);
    ScenarioDispatch d1 = solve_one(inst1, 0);
    CHECK(std::abs(d1.profit - 410.0) < 0.01);
}

TEST_CASE("profit evaluation hand examples") {
    ProblemInstance inst;
    inst.grid = TimeGrid{1, 4, 1.0, 0.25};
    inst.wind.power = Matrix(1, 4, 2.0);
    inst.prices.dayahead = {100.0};
    inst.prices.balancing_sell = Matrix(1, 4, 80.0);
    inst.prices.balancing_buy = Matrix(1, 4, 80.0);
    inst.schedule.power = {1.0};
    inst.config = CaseConfig::for_case(1);

    ScenarioDispatch d;
    d.sold.assign(4, 1.0);
    d.bought.assign(4, 0.0);
    CHECK(evaluate_scenario_profit(d, inst, 0) == doctest::Approx(180.0));

    d.sold.assign(4, 0.0);
    CHECK(evaluate_scenario_profit(d, inst, 0) == doctest::Approx(100.0)); // day-ahead only
}

TEST_CASE("dispatch invariants on the arbitrage optimum") {
    ProblemInstance inst = arbitrage_instance(4);
    ScenarioDispatch d = solve_one(inst, 0);
    const double dt = inst.grid.dt_balancing;
    double vu = inst.phes.v_upper_init, vl = inst.phes.v_lower_init;
    for (size_t t = 0; t < d.sold.size(); ++t) {
        CHECK(d.pump[t] * d.release[t] <= 1e-6);
        CHECK(d.sold[t] * d.bought[t] <= 1e-6);
        CHECK(d.bought[t] * d.pump[t] <= 1e-6);
        CHECK(d.q_pump[t] <= inst.phes.q_max + 1e-7);
        CHECK(d.q_release[t] <= inst.phes.q_max + 1e-7);
        CHECK(d.v_upper[t] >= inst.phes.v_upper_min - 1e-7);
        CHECK(d.v_upper[t] <= inst.phes.v_upper_max + 1e-7);
        CHECK(d.v_lower[t] >= inst.phes.v_lower_min - 1e-7);
        CHECK(d.v_lower[t] <= inst.phes.v_lower_max + 1e-7);
        // Water is conserved between the two reservoirs (no rain/evap here).
        CHECK(d.v_upper[t] + d.v_lower[t] == doctest::Approx(vu + vl).epsilon(1e-9));
        vu += (d.q_pump[t] - d.q_release[t]) * dt;
        vl += (d.q_release[t] - d.q_pump[t]) * dt;
    }
}

TEST_CASE("flat prices with an empty upper reservoir idle the storage") {
    // Round trip returns sigma_release/sigma_pump = 2/3 of the energy, so with
    // constant prices cycling is strictly unprofitable.
    ProblemInstance inst = storage_instance(3, 1);
    inst.phes.v_upper_init = inst.phes.v_upper_min;
    inst.wind.power = Matrix(1, 3, 2.0);
    inst.wind.base_power = {2.0, 2.0, 2.0};
    ScenarioDispatch d = solve_one(inst, 0);
    for (size_t t = 0; t < d.pump.size(); ++t) {
        CHECK(std::abs(d.q_pump[t]) <= 1e-6);
        CHECK(std::abs(d.q_release[t]) <= 1e-6);
        CHECK(d.sold[t] == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("price-aware optimization dominates the greedy dispatcher") {
    ProblemInstance inst = storage_instance(4, 2);
    // Deficit hours at a high price, surplus hours at a low one: greedy burns
    // water early, the optimizer saves it.
    double winds[2][4] = {{0.5, 2.0, 0.5, 2.0}, {0.8, 1.8, 0.4, 2.2}};
    double prices[4] = {40.0, 20.0, 180.0, 30.0};
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 4; ++t) {
            inst.wind.power.at(s, t) = winds[s][t];
            inst.prices.balancing_sell.at(s, t) = prices[t];
            inst.prices.balancing_buy.at(s, t) = prices[t];
        }
    inst.phes.v_upper_init = inst.phes.v_upper_min; // nothing banked for free

    ProblemInstance inst3 = inst;
    inst3.config = CaseConfig::for_case(3);
    double greedy_mean = 0.0;
    for (int s = 0; s < 2; ++s) greedy_mean += greedy_dispatch(inst3, s).profit;
    greedy_mean /= 2.0;

    DispatchSolution opt = solve_all_scenarios(inst, MilpOptions{});
    CHECK(opt.mean_profit >= greedy_mean - 1e-7);
}

TEST_CASE("per-scenario decomposition matches the monolithic problem") {
    ProblemInstance inst = storage_instance(3, 2);
    double winds[2][3] = {{0.5, 2.0, 1.0}, {1.5, 0.5, 2.5}};
    double prices[2][3] = {{30.0, 90.0, 60.0}, {80.0, 40.0, 20.0}};
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 3; ++t) {
            inst.wind.power.at(s, t) = winds[s][t];
            inst.prices.balancing_sell.at(s, t) = prices[s][t];
            inst.prices.balancing_buy.at(s, t) = prices[s][t];
        }

    // Monolithic problem: both scenarios side by side in one MILP.
    MilpProblem mono;
    double bf_sum = 0.0;
    for (int s = 0; s < 2; ++s) {
        auto [mp, map] = build_milp(inst, s);
        bf_sum += solve_milp_bruteforce(mp).objective_value;
        int offset = mono.lp.n_vars;
        for (int j = 0; j < mp.lp.n_vars; ++j) {
            auto [lo, hi] = mp.lp.var_bounds[static_cast<size_t>(j)];
            mono.lp.add_var(lo, hi, mp.lp.objective[static_cast<size_t>(j)]);
        }
        for (auto row : mp.lp.rows) {
            for (auto& [j, a] : row.coeffs) j += offset;
            mono.lp.rows.push_back(std::move(row));
        }
        for (int j : mp.binary_vars) mono.binary_vars.push_back(j + offset);
    }
    MilpSolution mono_sol = solve_milp_bruteforce(mono);
    REQUIRE(mono_sol.status == MilpStatus::Optimal);
    CHECK(mono_sol.objective_value == doctest::Approx(bf_sum).epsilon(1e-7));

    DispatchSolution split = solve_all_scenarios(inst, MilpOptions{});
    CHECK(split.objective_value == doctest::Approx(mono_sol.objective_value).epsilon(1e-6));
}
