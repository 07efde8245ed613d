#include "phesopt/runner.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace phes {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string describe(const RunConfig& c) {
    std::ostringstream os;
    os << c.wind_csv << '|' << c.dayahead_csv << '|' << c.power_curve_csv << '|'
       << c.phes_params_file << '|' << c.grid.horizon_hours << '|' << c.grid.steps_per_hour << '|'
       << c.gen.n_scenarios << '|' << c.gen.seed << '|' << c.gen.bins << '|'
       << num(c.gen.deviation_bound) << '|' << num(c.gen.price_deviation_bound) << '|'
       << num(c.gen.price_spread) << '|' << c.n_turbines << '|' << num(c.rain_per_step) << '|'
       << num(c.evap_per_step) << '|' << num(c.sell_cap_peak) << '|' << num(c.sell_cap_offpeak)
       << '|' << c.cap_window_start_hour << '|' << c.cap_window_end_hour << '|'
       << c.peak_window_start_hour << '|' << c.peak_window_end_hour << '|' << c.extended << '|'
       << c.case3_use_flat_price_milp;
    return os.str();
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

} // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    RunConfig c;
    fs::path base = fs::path(path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            std::istringstream probe(line);
            std::string any;
            if (probe >> any)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": expected 'key = value'");
            continue;
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t\r");
            size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "wind_csv") c.wind_csv = resolve(val);
            else if (key == "dayahead_csv") c.dayahead_csv = resolve(val);
            else if (key == "power_curve_csv") c.power_curve_csv = resolve(val);
            else if (key == "phes_params") c.phes_params_file = resolve(val);
            else if (key == "horizon_hours") c.grid.horizon_hours = std::stoi(val);
            else if (key == "steps_per_hour") {
                c.grid.steps_per_hour = std::stoi(val);
                c.grid.dt_balancing = c.grid.dt_dayahead / c.grid.steps_per_hour;
            } else if (key == "n_scenarios") c.gen.n_scenarios = std::stoi(val);
            else if (key == "seed") c.gen.seed = std::stoull(val);
            else if (key == "bins") c.gen.bins = std::stoi(val);
            else if (key == "deviation_bound") c.gen.deviation_bound = std::stod(val);
            else if (key == "price_deviation_bound") c.gen.price_deviation_bound = std::stod(val);
            else if (key == "price_spread") c.gen.price_spread = std::stod(val);
            else if (key == "n_turbines") c.n_turbines = std::stoi(val);
            else if (key == "wind_speed_step_minutes") c.wind_speed_step_minutes = std::stod(val);
            else if (key == "rain_per_step") c.rain_per_step = std::stod(val);
            else if (key == "evap_per_step") c.evap_per_step = std::stod(val);
            else if (key == "sell_cap_peak_mw") c.sell_cap_peak = std::stod(val);
            else if (key == "sell_cap_offpeak_mw") c.sell_cap_offpeak = std::stod(val);
            else if (key == "cap_window_start_hour") c.cap_window_start_hour = std::stoi(val);
            else if (key == "cap_window_end_hour") c.cap_window_end_hour = std::stoi(val);
            else if (key == "peak_window_start_hour") c.peak_window_start_hour = std::stoi(val);
            else if (key == "peak_window_end_hour") c.peak_window_end_hour = std::stoi(val);
            else if (key == "extended") c.extended = (val == "1" || val == "true");
            else if (key == "case3_mode") c.case3_use_flat_price_milp = (val == "flat_price_milp");
            else if (key == "time_limit_sec") c.time_limit_sec = std::stod(val);
            else if (key == "node_limit") c.node_limit = std::stol(val);
            else if (key == "out_dir") c.out_dir = resolve(val);
            else
                throw std::runtime_error("unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": bad value for key '" + key + "'");
        }
    }
    for (const auto* p : {&c.wind_csv, &c.dayahead_csv, &c.power_curve_csv, &c.phes_params_file})
        if (p->empty())
            throw std::runtime_error(path + ": wind_csv, dayahead_csv, power_curve_csv and "
                                            "phes_params must all be set");
    return c;
}

SharedInputs load_shared_inputs(const RunConfig& cfg) {
    SharedInputs sh;
    sh.grid = cfg.grid;
    sh.phes = load_phes_params(cfg.phes_params_file);
    const int T = sh.grid.total_steps();
    if (cfg.rain_per_step != 0.0) sh.phes.rain.assign(static_cast<size_t>(T), cfg.rain_per_step);
    if (cfg.evap_per_step != 0.0) sh.phes.evap.assign(static_cast<size_t>(T), cfg.evap_per_step);

    SpeedSeries raw = load_wind_speeds(cfg.wind_csv, cfg.wind_speed_step_minutes);
    SpeedSeries speeds = resample_to_balancing(raw, sh.grid);
    PowerCurve curve = load_power_curve(cfg.power_curve_csv);
    sh.wind_capacity = curve.rated_power * cfg.n_turbines;
    sh.wind = generate_scenarios_from_speeds(speeds, curve, cfg.n_turbines, cfg.gen);
    sh.schedule = day_ahead_schedule(sh.wind, sh.grid);
    sh.prices.dayahead = load_dayahead_prices(cfg.dayahead_csv, sh.grid);
    auto [sell, buy] = generate_balancing_prices(sh.prices.dayahead, cfg.gen, sh.grid);
    sh.prices.balancing_sell = std::move(sell);
    sh.prices.balancing_buy = std::move(buy);
    return sh;
}

ProblemInstance make_instance(const RunConfig& cfg, const SharedInputs& shared, int case_id) {
    ProblemInstance inst;
    inst.grid = shared.grid;
    inst.phes = shared.phes;
    inst.wind = shared.wind;
    inst.prices = shared.prices;
    inst.schedule = shared.schedule;
    inst.wind_capacity = shared.wind_capacity;
    inst.config = CaseConfig::for_case(case_id);
    inst.config.extended_constraints = cfg.extended;
    inst.config.restore_lower_reservoir = cfg.extended;
    inst.config.sell_cap_peak = cfg.sell_cap_peak;
    inst.config.sell_cap_offpeak = cfg.sell_cap_offpeak;
    inst.config.cap_window_start_hour = cfg.cap_window_start_hour;
    inst.config.cap_window_end_hour = cfg.cap_window_end_hour;
    inst.config.case3_use_flat_price_milp = cfg.case3_use_flat_price_milp;

    auto violations = validate_instance(inst);
    if (!violations.empty()) {
        std::ostringstream os;
        os << "instance validation failed (" << violations.size() << " violations):";
        for (const auto& v : violations) os << "\n  " << v.field << ": " << v.message;
        throw std::runtime_error(os.str());
    }
    return inst;
}

double peak_window_energy(const DispatchSolution& d, int start_hour, int end_hour,
                          const TimeGrid& grid) {
    if (d.scenarios.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& sc : d.scenarios) {
        for (int t = 0; t < grid.total_steps(); ++t) {
            int h = hour_of_step(t, grid);
            if (h >= start_hour && h < end_hour && !sc.release.empty())
                sum += sc.release[static_cast<size_t>(t)] * grid.dt_balancing;
        }
    }
    return sum / static_cast<double>(d.scenarios.size());
}

CaseResult run_case(const RunConfig& cfg, const SharedInputs& shared, int case_id) {
    const auto t0 = std::chrono::steady_clock::now();
    ProblemInstance inst = make_instance(cfg, shared, case_id);
    const int S = inst.wind.n_scenarios();

    DispatchSolution dispatch;
    if (case_id == 3 && !cfg.case3_use_flat_price_milp) {
        dispatch.scenarios.reserve(static_cast<size_t>(S));
        for (int s = 0; s < S; ++s) dispatch.scenarios.push_back(greedy_dispatch(inst, s));
        dispatch.mean_profit = evaluate_profit(dispatch, inst).total;
    } else {
        MilpOptions opts;
        opts.time_limit_sec = cfg.time_limit_sec;
        opts.node_limit = cfg.node_limit;
        dispatch = solve_all_scenarios(inst, opts);
    }

    CaseResult res;
    res.dispatch = std::move(dispatch);
    auto& rep = res.report;
    rep.case_id = case_id;
    rep.profit = res.dispatch.mean_profit;
    for (const auto& sc : res.dispatch.scenarios) {
        for (double v : sc.bought) rep.avg_bought_power += v;
        for (double v : sc.sold) rep.avg_sold_power += v;
        rep.nodes += sc.nodes;
        rep.max_gap = std::max(rep.max_gap, sc.gap);
        rep.optimal = rep.optimal && sc.optimal;
    }
    rep.avg_bought_power /= S;
    rep.avg_sold_power /= S;
    rep.peak_window_energy_mwh = peak_window_energy(res.dispatch, cfg.peak_window_start_hour,
                                                    cfg.peak_window_end_hour, inst.grid);
    rep.wall_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

void compare_cases(std::vector<CaseReport>& reports) {
    const CaseReport* base = nullptr;
    for (const auto& r : reports)
        if (r.case_id == 1) base = &r;
    if (!base) throw std::runtime_error("case 1 is required as the comparison baseline");
    for (auto& r : reports) {
        if (r.case_id == 1) {
            r.profit_increase_pct.reset();
            continue;
        }
        if (base->profit == 0.0)
            r.profit_increase_pct.reset(); // undefined baseline
        else
            r.profit_increase_pct = 100.0 * (r.profit - base->profit) / base->profit;
    }
}

void emit_report(const std::vector<CaseResult>& results, const SharedInputs& shared,
                 const RunConfig& cfg, const std::string& out_dir) {
    if (results.empty()) throw std::runtime_error("no case results to report");
    fs::create_directories(out_dir);

    std::vector<CaseReport> reports;
    for (const auto& r : results) reports.push_back(r.report);
    compare_cases(reports);

    const TimeGrid& g = shared.grid;
    const int T = g.total_steps();

    // table3.csv: one row per case.
    {
        auto out = open_out(fs::path(out_dir) / "table3.csv");
        out << "case,avg_bought_mw,avg_sold_mw,profit_tl,profit_increase_pct\n";
        for (const auto& r : reports) {
            out << r.case_id << ',' << num(r.avg_bought_power) << ',' << num(r.avg_sold_power)
                << ',' << num(r.profit) << ','
                << (r.profit_increase_pct ? num(*r.profit_increase_pct) : "") << "\n";
        }
    }

    // summary.json: all report fields plus run metadata.
    {
        nlohmann::ordered_json j;
        j["seed"] = cfg.gen.seed;
        j["config_hash"] = fnv1a(describe(cfg));
        j["extended_constraints"] = cfg.extended;
        j["n_scenarios"] = cfg.gen.n_scenarios;
        j["cases"] = nlohmann::ordered_json::array();
        for (const auto& r : reports) {
            nlohmann::ordered_json c;
            c["case_id"] = r.case_id;
            c["avg_bought_power_mw"] = r.avg_bought_power;
            c["avg_sold_power_mw"] = r.avg_sold_power;
            c["profit_tl"] = r.profit;
            if (r.profit_increase_pct)
                c["profit_increase_pct"] = *r.profit_increase_pct;
            else
                c["profit_increase_pct"] = nullptr;
            c["peak_window_energy_mwh"] = r.peak_window_energy_mwh;
            c["nodes_explored"] = r.nodes;
            c["max_gap"] = r.max_gap;
            c["optimal"] = r.optimal;
            j["cases"].push_back(c);
        }
        auto out = open_out(fs::path(out_dir) / "summary.json");
        out << j.dump(2) << "\n";
    }

    // Per-case dispatch and plot-data files.
    for (const auto& res : results) {
        const int case_id = res.report.case_id;
        fs::path dir = fs::path(out_dir) / std::to_string(case_id);
        fs::create_directories(dir);
        const auto& scs = res.dispatch.scenarios;
        const int S = static_cast<int>(scs.size());
        ProblemInstance inst = make_instance(cfg, shared, case_id);

        {
            auto out = open_out(dir / "dispatch.csv");
            out << "scenario,step,wind_mw,planned_mw,sold_mw,bought_mw,pump_mw,release_mw,"
                   "q_pump,q_release,v_upper,v_lower,curtail_mw\n";
            for (int s = 0; s < S; ++s) {
                const auto& d = scs[static_cast<size_t>(s)];
                for (int t = 0; t < T; ++t) {
                    const size_t ts = static_cast<size_t>(t);
                    int h = hour_of_step(t, g);
                    out << s + 1 << ',' << t + 1 << ',' << num(shared.wind.power.at(s, t)) << ','
                        << num(shared.schedule.power[static_cast<size_t>(h)] *
                               inst.config.load_scale)
                        << ',' << num(d.sold[ts]) << ',' << num(d.bought[ts]) << ','
                        << num(d.pump[ts]) << ',' << num(d.release[ts]) << ','
                        << num(d.q_pump[ts]) << ',' << num(d.q_release[ts]) << ','
                        << num(d.v_upper.empty() ? 0.0 : d.v_upper[ts]) << ','
                        << num(d.v_lower.empty() ? 0.0 : d.v_lower[ts]) << ','
                        << num(d.curtail[ts]) << "\n";
                }
            }
        }

        auto mean_over_scenarios = [&](auto getter) {
            Series m(static_cast<size_t>(T), 0.0);
            for (const auto& d : scs)
                for (int t = 0; t < T; ++t) m[static_cast<size_t>(t)] += getter(d, t);
            for (double& v : m) v /= S;
            return m;
        };
        Series sold = mean_over_scenarios(
            [](const ScenarioDispatch& d, int t) { return d.sold[static_cast<size_t>(t)]; });
        Series bought = mean_over_scenarios(
            [](const ScenarioDispatch& d, int t) { return d.bought[static_cast<size_t>(t)]; });
        Series pump = mean_over_scenarios(
            [](const ScenarioDispatch& d, int t) { return d.pump[static_cast<size_t>(t)]; });
        Series release = mean_over_scenarios(
            [](const ScenarioDispatch& d, int t) { return d.release[static_cast<size_t>(t)]; });
        Series vu = mean_over_scenarios([](const ScenarioDispatch& d, int t) {
            return d.v_upper.empty() ? 0.0 : d.v_upper[static_cast<size_t>(t)];
        });
        Series vl = mean_over_scenarios([](const ScenarioDispatch& d, int t) {
            return d.v_lower.empty() ? 0.0 : d.v_lower[static_cast<size_t>(t)];
        });

        {
            auto out = open_out(dir / "balancing_exchange.csv");
            out << "step,sold_mw,bought_mw\n";
            for (int t = 0; t < T; ++t)
                out << t + 1 << ',' << num(sold[static_cast<size_t>(t)]) << ','
                    << num(bought[static_cast<size_t>(t)]) << "\n";
        }
        {
            auto out = open_out(dir / "pump_turbine.csv");
            out << "step,pump_mw,release_mw\n";
            for (int t = 0; t < T; ++t)
                out << t + 1 << ',' << num(pump[static_cast<size_t>(t)]) << ','
                    << num(release[static_cast<size_t>(t)]) << "\n";
        }
        {
            auto out = open_out(dir / "reservoir_volumes.csv");
            out << "step,v_upper_hm3,v_lower_hm3\n";
            for (int t = 0; t < T; ++t)
                out << t + 1 << ',' << num(vu[static_cast<size_t>(t)]) << ','
                    << num(vl[static_cast<size_t>(t)]) << "\n";
        }
        {
            auto out = open_out(dir / "peak_window_supply.csv");
            out << "step,release_mw\n";
            for (int t = 0; t < T; ++t) {
                int h = hour_of_step(t, g);
                if (h >= cfg.peak_window_start_hour && h < cfg.peak_window_end_hour)
                    out << t + 1 << ',' << num(release[static_cast<size_t>(t)]) << "\n";
            }
        }
    }

    {
        auto out = open_out(fs::path(out_dir) / "manifest.txt");
        out << "seed " << cfg.gen.seed << "\n";
        out << "config_hash " << fnv1a(describe(cfg)) << "\n";
        out << "cases";
        for (const auto& r : reports) out << " " << r.case_id;
        out << "\n";
        out << "extended " << (cfg.extended ? 1 : 0) << "\n";
    }
}

void write_fixture(const std::string& out_dir) {
    fs::create_directories(out_dir);
    {
        auto out = open_out(fs::path(out_dir) / "wind.csv");
        out << "timestamp,speed_mps\n";
        for (int i = 0; i < 288; ++i) {
            int minutes = i * 5;
            char ts[32];
            std::snprintf(ts, sizeof(ts), "2017-08-01 %02d:%02d", minutes / 60, minutes % 60);
            double x = minutes / 1440.0;
            double v = 7.5 + 4.5 * std::sin(2.0 * M_PI * x - 2.0) +
                       1.8 * std::sin(2.0 * M_PI * minutes / 180.0 + 0.7) +
                       0.9 * std::sin(2.0 * M_PI * minutes / 55.0 + 1.3);
            if (v < 0.0) v = 0.0;
            out << ts << ',' << num(v) << "\n";
        }
    }
    {
        auto out = open_out(fs::path(out_dir) / "dayahead_prices.csv");
        out << "hour,price_tl_per_mwh\n";
        for (int h = 0; h < 24; ++h) {
            double p = 60.0 + 120.0 * std::exp(-(h - 14.5) * (h - 14.5) / (2.0 * 2.5 * 2.5));
            out << h + 1 << ',' << num(p) << "\n";
        }
    }
    {
        auto out = open_out(fs::path(out_dir) / "power_curve.csv");
        out << "speed_mps,power_mw\n";
        const std::pair<double, double> pts[] = {
            {4.0, 0.0},  {5.0, 0.19}, {6.0, 0.42}, {7.0, 0.73}, {8.0, 1.12},
            {9.0, 1.6},  {10.0, 2.04}, {11.0, 2.42}, {12.0, 2.7}, {13.0, 2.88},
            {14.0, 2.97}, {15.0, 3.0}, {25.0, 3.0}};
        for (auto [s, p] : pts) out << num(s) << ',' << num(p) << "\n";
    }
    {
        auto out = open_out(fs::path(out_dir) / "phes_table1");
        out << "# Pumped-hydro storage unit parameters\n"
            << "v_upper_init 50\n"
            << "v_upper_max 100\n"
            << "v_upper_min 10\n"
            << "v_lower_init 50\n"
            << "v_lower_max 100\n"
            << "v_lower_min 10\n"
            << "sigma_pump 1.2\n"
            << "sigma_release 0.8\n"
            << "q_max 20\n";
    }
    {
        auto out = open_out(fs::path(out_dir) / "config.ini");
        out << "# phesopt run configuration\n"
            << "wind_csv = wind.csv\n"
            << "dayahead_csv = dayahead_prices.csv\n"
            << "power_curve_csv = power_curve.csv\n"
            << "phes_params = phes_table1\n"
            << "horizon_hours = 24\n"
            << "steps_per_hour = 4\n"
            << "n_scenarios = 10\n"
            << "seed = 42\n"
            << "bins = 9\n"
            << "deviation_bound = 0.2\n"
            << "price_deviation_bound = 0.2\n"
            << "price_spread = 0\n"
            << "n_turbines = 1\n"
            << "rain_per_step = 0\n"
            << "evap_per_step = 0\n"
            << "sell_cap_peak_mw = 2\n"
            << "sell_cap_offpeak_mw = 0.5\n"
            << "cap_window_start_hour = 9\n"
            << "cap_window_end_hour = 21\n"
            << "peak_window_start_hour = 13\n"
            << "peak_window_end_hour = 17\n"
            << "time_limit_sec = 60\n"
            << "node_limit = 200000\n";
    }
}

} // namespace phes
