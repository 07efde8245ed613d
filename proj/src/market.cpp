#include "phesopt/market.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

namespace phes {

namespace {

struct BigM {
    double pump;
    double release;
    double dp;
};

BigM big_m(const ProblemInstance& inst) {
    double max_planned = 0.0;
    for (double p : inst.schedule.power) max_planned = std::max(max_planned, p);
    BigM m;
    m.pump = inst.phes.sigma_pump * inst.phes.q_max;
    m.release = inst.phes.sigma_release * inst.phes.q_max;
    m.dp = inst.wind_capacity + m.release + max_planned;
    return m;
}

} // namespace

std::pair<Series, Series> objective_prices(const ProblemInstance& inst, int s) {
    const int T = inst.grid.total_steps();
    Series sell(static_cast<size_t>(T)), buy(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        sell[static_cast<size_t>(t)] = inst.prices.balancing_sell.at(s, t);
        buy[static_cast<size_t>(t)] = inst.prices.balancing_buy.at(s, t);
    }
    if (!inst.config.price_aware) {
        double mean_sell = std::accumulate(sell.begin(), sell.end(), 0.0) / T;
        double mean_buy = std::accumulate(buy.begin(), buy.end(), 0.0) / T;
        std::fill(sell.begin(), sell.end(), mean_sell);
        std::fill(buy.begin(), buy.end(), mean_buy);
    }
    return {std::move(sell), std::move(buy)};
}

std::pair<MilpProblem, VarIndexMap> build_milp(const ProblemInstance& inst, int s) {
    const auto& g = inst.grid;
    const auto& cfg = inst.config;
    const auto& ph = inst.phes;
    const int T = g.total_steps();
    const double dt = g.dt_balancing;
    if (s < 0 || s >= inst.wind.n_scenarios())
        throw std::invalid_argument("scenario index " + std::to_string(s) + " out of range");
    if (inst.wind.power.cols() != T || static_cast<int>(inst.schedule.power.size()) != g.horizon_hours)
        throw std::invalid_argument("instance dimensions inconsistent with time grid");

    const BigM M = big_m(inst);
    auto [lam_sell, lam_buy] = objective_prices(inst, s);

    MilpProblem mp;
    LpProblem& lp = mp.lp;
    VarIndexMap map;
    map.storage = cfg.storage_enabled;
    auto resize_all = [&](std::vector<int>& v) { v.assign(static_cast<size_t>(T), -1); };
    resize_all(map.p_sold);
    resize_all(map.p_bought);
    resize_all(map.p_curtail);
    resize_all(map.u_dp1);
    resize_all(map.p_pump);
    resize_all(map.p_release);
    resize_all(map.q_pump);
    resize_all(map.q_release);
    resize_all(map.v_upper);
    resize_all(map.v_lower);
    resize_all(map.u_ps);
    resize_all(map.u_dp2);

    for (int t = 0; t < T; ++t) {
        const int h = hour_of_step(t, g);
        const size_t ts = static_cast<size_t>(t);
        double sold_cap = std::min(M.dp, cfg.sell_cap_at_hour(h));
        // Power is only ever bought to cover the schedule deficit: buying to
        // curtail loses money outright and buying to pump is forbidden, so
        // capping the variable here keeps that arbitrage out of the relaxation.
        double deficit = std::max(0.0, inst.schedule.power[static_cast<size_t>(h)] *
                                               cfg.load_scale -
                                           inst.wind.power.at(s, t));
        map.p_sold[ts] = lp.add_var(0.0, sold_cap, lam_sell[ts] * dt);
        map.p_bought[ts] = lp.add_var(0.0, std::min(M.dp, deficit), -lam_buy[ts] * dt);
        map.p_curtail[ts] = lp.add_var(0.0, kInf, 0.0);
        map.u_dp1[ts] = lp.add_var(0.0, 1.0, 0.0);
        mp.binary_vars.push_back(map.u_dp1[ts]);
        if (cfg.storage_enabled) {
            map.p_pump[ts] = lp.add_var(0.0, M.pump, 0.0);
            map.p_release[ts] = lp.add_var(0.0, M.release, 0.0);
            map.q_pump[ts] = lp.add_var(0.0, ph.q_max, 0.0);
            map.q_release[ts] = lp.add_var(0.0, ph.q_max, 0.0);
            map.v_upper[ts] = lp.add_var(ph.v_upper_min, ph.v_upper_max, 0.0);
            map.v_lower[ts] = lp.add_var(ph.v_lower_min, ph.v_lower_max, 0.0);
            map.u_ps[ts] = lp.add_var(0.0, 1.0, 0.0);
            map.u_dp2[ts] = lp.add_var(0.0, 1.0, 0.0);
            mp.binary_vars.push_back(map.u_ps[ts]);
            mp.binary_vars.push_back(map.u_dp2[ts]);
        }
    }
    map.n_vars = lp.n_vars;

    for (int t = 0; t < T; ++t) {
        const int h = hour_of_step(t, g);
        const size_t ts = static_cast<size_t>(t);
        const double wind = inst.wind.power.at(s, t);
        const double planned = inst.schedule.power[static_cast<size_t>(h)] * cfg.load_scale;

        // Power balance: wind + bought + released = planned + sold + pumped + curtailed.
        LpRow bal;
        bal.rel = Relation::EQ;
        bal.rhs = planned - wind;
        bal.coeffs = {{map.p_bought[ts], 1.0}, {map.p_sold[ts], -1.0}, {map.p_curtail[ts], -1.0}};
        if (cfg.storage_enabled) {
            bal.coeffs.push_back({map.p_release[ts], 1.0});
            bal.coeffs.push_back({map.p_pump[ts], -1.0});
        }
        lp.rows.push_back(std::move(bal));

        // Buy/sell exclusivity.
        lp.add_row({{map.p_sold[ts], 1.0}, {map.u_dp1[ts], -M.dp}}, Relation::LE, 0.0);
        lp.add_row({{map.p_bought[ts], 1.0}, {map.u_dp1[ts], M.dp}}, Relation::LE, M.dp);

        if (!cfg.storage_enabled) continue;

        // Flow-to-power conversion.
        lp.add_row({{map.p_release[ts], 1.0}, {map.q_release[ts], -ph.sigma_release}},
                   Relation::EQ, 0.0);
        lp.add_row({{map.p_pump[ts], 1.0}, {map.q_pump[ts], -ph.sigma_pump}}, Relation::EQ, 0.0);

        // Reservoir volume recursion; the initial volumes act as the t-1 state
        // of the first step.
        double net = ph.rain_at(t) - ph.evap_at(t);
        LpRow up, low;
        up.rel = low.rel = Relation::EQ;
        up.coeffs = {{map.v_upper[ts], 1.0}, {map.q_pump[ts], -dt}, {map.q_release[ts], dt}};
        low.coeffs = {{map.v_lower[ts], 1.0}, {map.q_release[ts], -dt}, {map.q_pump[ts], dt}};
        if (t == 0) {
            up.rhs = ph.v_upper_init + net;
            low.rhs = ph.v_lower_init + net;
        } else {
            up.coeffs.push_back({map.v_upper[ts - 1], -1.0});
            low.coeffs.push_back({map.v_lower[ts - 1], -1.0});
            up.rhs = net;
            low.rhs = net;
        }
        lp.rows.push_back(std::move(up));
        lp.rows.push_back(std::move(low));

        // Pump/turbine exclusivity.
        lp.add_row({{map.p_pump[ts], 1.0}, {map.u_ps[ts], M.pump}}, Relation::LE, M.pump);
        lp.add_row({{map.p_release[ts], 1.0}, {map.u_ps[ts], -M.release}}, Relation::LE, 0.0);

        // No buying from the grid to pump (producer registration).
        lp.add_row({{map.p_bought[ts], 1.0}, {map.u_dp2[ts], -M.dp}}, Relation::LE, 0.0);
        lp.add_row({{map.p_pump[ts], 1.0}, {map.u_dp2[ts], M.pump}}, Relation::LE, M.pump);
    }

    // Net-zero hydraulic exchange over the horizon (lower-reservoir restoration).
    if (cfg.storage_enabled && cfg.restore_lower_reservoir) {
        LpRow r;
        r.rel = Relation::EQ;
        r.rhs = 0.0;
        for (int t = 0; t < T; ++t) {
            r.coeffs.push_back({map.q_release[static_cast<size_t>(t)], dt});
            r.coeffs.push_back({map.q_pump[static_cast<size_t>(t)], -dt});
        }
        lp.rows.push_back(std::move(r));
    }

    return {std::move(mp), std::move(map)};
}

ScenarioDispatch greedy_dispatch(const ProblemInstance& inst, int s) {
    const auto& g = inst.grid;
    const auto& cfg = inst.config;
    const auto& ph = inst.phes;
    if (!cfg.storage_enabled)
        throw std::logic_error("greedy_dispatch requires storage_enabled");
    const int T = g.total_steps();
    const double dt = g.dt_balancing;

    ScenarioDispatch d;
    auto sz = static_cast<size_t>(T);
    d.sold.assign(sz, 0.0);
    d.bought.assign(sz, 0.0);
    d.curtail.assign(sz, 0.0);
    d.pump.assign(sz, 0.0);
    d.release.assign(sz, 0.0);
    d.q_pump.assign(sz, 0.0);
    d.q_release.assign(sz, 0.0);
    d.v_upper.assign(sz, 0.0);
    d.v_lower.assign(sz, 0.0);

    // Under the restoration rule the plant may only release water it pumped
    // earlier in the horizon; `stored` tracks that budget in Hm3.
    const bool restore = cfg.restore_lower_reservoir;
    double stored = 0.0;
    double vu = ph.v_upper_init;
    double vl = ph.v_lower_init;
    for (int t = 0; t < T; ++t) {
        const size_t ts = static_cast<size_t>(t);
        const int h = hour_of_step(t, g);
        const double net = ph.rain_at(t) - ph.evap_at(t);
        const double planned = inst.schedule.power[static_cast<size_t>(h)] * cfg.load_scale;
        const double imbalance = inst.wind.power.at(s, t) - planned;

        if (imbalance < 0.0) {
            double deficit = -imbalance;
            double q_room_upper = std::max(0.0, (vu + net - ph.v_upper_min) / dt);
            double q_room_lower = std::max(0.0, (ph.v_lower_max - vl - net) / dt);
            double q = std::min({deficit / ph.sigma_release, ph.q_max, q_room_upper, q_room_lower});
            if (restore) q = std::min(q, stored / dt);
            d.q_release[ts] = q;
            d.release[ts] = ph.sigma_release * q;
            d.bought[ts] = deficit - d.release[ts];
            if (d.bought[ts] < 1e-12) d.bought[ts] = 0.0;
        } else {
            double cap = cfg.sell_cap_at_hour(h);
            d.sold[ts] = std::min(imbalance, cap);
            double residual = imbalance - d.sold[ts];
            if (residual > 0.0) {
                double q_room_upper = std::max(0.0, (ph.v_upper_max - vu - net) / dt);
                double q_room_lower = std::max(0.0, (vl + net - ph.v_lower_min) / dt);
                double q = std::min({residual / ph.sigma_pump, ph.q_max, q_room_upper, q_room_lower});
                d.q_pump[ts] = q;
                d.pump[ts] = ph.sigma_pump * q;
                d.curtail[ts] = residual - d.pump[ts];
                if (d.curtail[ts] < 1e-12) d.curtail[ts] = 0.0;
            }
        }

        stored += (d.q_pump[ts] - d.q_release[ts]) * dt;
        vu += (d.q_pump[ts] - d.q_release[ts]) * dt + net;
        vl += (d.q_release[ts] - d.q_pump[ts]) * dt + net;
        d.v_upper[ts] = vu;
        d.v_lower[ts] = vl;
    }

    if (restore && stored > 1e-12) {
        // Water pumped but never released would leave a nonzero net exchange;
        // trim the latest pumps back to curtailment and rebuild the volumes.
        for (int t = T - 1; t >= 0 && stored > 1e-12; --t) {
            const size_t ts = static_cast<size_t>(t);
            double cut = std::min(d.q_pump[ts], stored / dt);
            if (cut <= 0.0) continue;
            d.q_pump[ts] -= cut;
            d.pump[ts] = ph.sigma_pump * d.q_pump[ts];
            d.curtail[ts] += ph.sigma_pump * cut;
            stored -= cut * dt;
        }
        vu = ph.v_upper_init;
        vl = ph.v_lower_init;
        for (int t = 0; t < T; ++t) {
            const size_t ts = static_cast<size_t>(t);
            const double net = ph.rain_at(t) - ph.evap_at(t);
            vu += (d.q_pump[ts] - d.q_release[ts]) * dt + net;
            vl += (d.q_release[ts] - d.q_pump[ts]) * dt + net;
            d.v_upper[ts] = vu;
            d.v_lower[ts] = vl;
        }
    }
    d.profit = evaluate_scenario_profit(d, inst, s);
    return d;
}

ScenarioDispatch extract_solution(const MilpSolution& ms, const VarIndexMap& map,
                                  const ProblemInstance& inst, int s) {
    if (!ms.has_incumbent)
        throw std::invalid_argument("extract_solution requires a solution with an incumbent");
    const auto& g = inst.grid;
    const auto& ph = inst.phes;
    const int T = g.total_steps();
    const double dt = g.dt_balancing;

    ScenarioDispatch d;
    auto sz = static_cast<size_t>(T);
    auto pull = [&](const std::vector<int>& idx) {
        Series out(sz, 0.0);
        for (int t = 0; t < T; ++t)
            if (idx[static_cast<size_t>(t)] >= 0)
                out[static_cast<size_t>(t)] = ms.x[static_cast<size_t>(idx[static_cast<size_t>(t)])];
        return out;
    };
    d.sold = pull(map.p_sold);
    d.bought = pull(map.p_bought);
    d.curtail = pull(map.p_curtail);
    d.pump = pull(map.p_pump);
    d.release = pull(map.p_release);
    d.q_pump = pull(map.q_pump);
    d.q_release = pull(map.q_release);
    d.v_upper.assign(sz, 0.0);
    d.v_lower.assign(sz, 0.0);
    d.nodes = ms.nodes_explored;
    d.gap = ms.gap;
    d.optimal = ms.status == MilpStatus::Optimal;

    // Volumes re-derived from flows; cross-checked against the solver values.
    if (map.storage) {
        double vu = ph.v_upper_init;
        double vl = ph.v_lower_init;
        for (int t = 0; t < T; ++t) {
            const size_t ts = static_cast<size_t>(t);
            double net = ph.rain_at(t) - ph.evap_at(t);
            vu += (d.q_pump[ts] - d.q_release[ts]) * dt + net;
            vl += (d.q_release[ts] - d.q_pump[ts]) * dt + net;
            d.v_upper[ts] = vu;
            d.v_lower[ts] = vl;
            double sv_u = ms.x[static_cast<size_t>(map.v_upper[ts])];
            double sv_l = ms.x[static_cast<size_t>(map.v_lower[ts])];
            if (std::abs(sv_u - vu) > 1e-6 || std::abs(sv_l - vl) > 1e-6) {
                std::ostringstream os;
                os << "volume recursion mismatch at step " << t + 1 << ": solver (" << sv_u
                   << "," << sv_l << ") vs recomputed (" << vu << "," << vl << ")";
                throw std::runtime_error(os.str());
            }
        }
    }

    for (int t = 0; t < T; ++t) {
        const size_t ts = static_cast<size_t>(t);
        const int h = hour_of_step(t, g);
        const double planned =
            inst.schedule.power[static_cast<size_t>(h)] * inst.config.load_scale;
        double residual = inst.wind.power.at(s, t) + d.bought[ts] + d.release[ts] - planned -
                          d.sold[ts] - d.pump[ts] - d.curtail[ts];
        if (std::abs(residual) > 1e-6)
            throw std::runtime_error("power balance residual " + std::to_string(residual) +
                                     " at step " + std::to_string(t + 1));
        if (d.pump[ts] * d.release[ts] > 1e-6 || d.sold[ts] * d.bought[ts] > 1e-6 ||
            d.bought[ts] * d.pump[ts] > 1e-6)
            throw std::runtime_error("mode exclusivity violated at step " + std::to_string(t + 1));
    }

    d.profit = evaluate_scenario_profit(d, inst, s);
    return d;
}

double evaluate_scenario_profit(const ScenarioDispatch& d, const ProblemInstance& inst, int s) {
    const auto& g = inst.grid;
    double profit = 0.0;
    for (int h = 0; h < g.horizon_hours; ++h)
        profit += inst.schedule.power[static_cast<size_t>(h)] * inst.config.load_scale *
                  inst.prices.dayahead[static_cast<size_t>(h)] * g.dt_dayahead;
    for (int t = 0; t < g.total_steps(); ++t) {
        const size_t ts = static_cast<size_t>(t);
        profit += (d.sold[ts] * inst.prices.balancing_sell.at(s, t) -
                   d.bought[ts] * inst.prices.balancing_buy.at(s, t)) *
                  g.dt_balancing;
    }
    return profit;
}

ProfitBreakdown evaluate_profit(const DispatchSolution& d, const ProblemInstance& inst) {
    ProfitBreakdown out;
    const int S = static_cast<int>(d.scenarios.size());
    if (S == 0) throw std::invalid_argument("no scenarios in dispatch solution");
    out.per_scenario.resize(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) {
        out.per_scenario[static_cast<size_t>(s)] =
            evaluate_scenario_profit(d.scenarios[static_cast<size_t>(s)], inst, s);
        out.total += out.per_scenario[static_cast<size_t>(s)];
    }
    out.total /= S;
    return out;
}

DispatchSolution solve_all_scenarios(const ProblemInstance& inst, const MilpOptions& opts) {
    const int S = inst.wind.n_scenarios();
    DispatchSolution out;
    out.scenarios.resize(static_cast<size_t>(S));
    std::vector<std::future<std::pair<ScenarioDispatch, double>>> futs;
    futs.reserve(static_cast<size_t>(S));
    for (int s = 0; s < S; ++s) {
        futs.push_back(std::async(std::launch::async, [&inst, &opts, s] {
            auto [mp, map] = build_milp(inst, s);
            MilpSolution ms = solve_milp(mp, opts);
            if (!ms.has_incumbent)
                throw std::runtime_error("scenario " + std::to_string(s + 1) +
                                         ": no incumbent within limits (status " +
                                         std::to_string(static_cast<int>(ms.status)) + ")");
            return std::make_pair(extract_solution(ms, map, inst, s), ms.objective_value);
        }));
    }
    for (int s = 0; s < S; ++s) {
        auto [disp, obj] = futs[static_cast<size_t>(s)].get();
        out.scenarios[static_cast<size_t>(s)] = std::move(disp);
        out.objective_value += obj;
    }
    out.mean_profit = evaluate_profit(out, inst).total;
    return out;
}

} // namespace phes
