#include "phesopt/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace phes {

CaseConfig CaseConfig::for_case(int case_id) {
    CaseConfig c;
    c.case_id = case_id;
    switch (case_id) {
        case 1:
            break;
        case 2:
            c.load_scale = 0.8;
            break;
        case 3:
            c.storage_enabled = true;
            c.price_aware = false;
            break;
        case 4:
            c.storage_enabled = true;
            break;
        default:
            throw std::invalid_argument("case_id must be 1..4, got " + std::to_string(case_id));
    }
    return c;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

void check_series_len(std::vector<Violation>& out, const std::string& field,
                      const Series& s, size_t expected) {
    if (!s.empty() && s.size() != expected)
        out.push_back({field, field + " has length " + std::to_string(s.size()) +
                              ", expected " + std::to_string(expected)});
}

void check_nonneg(std::vector<Violation>& out, const std::string& field, const Series& s) {
    for (size_t i = 0; i < s.size(); ++i)
        if (s[i] < 0.0 || !std::isfinite(s[i]))
            out.push_back({field, field + "[" + std::to_string(i + 1) + "]=" + fmt(s[i]) +
                                  " is negative or non-finite"});
}

} // namespace

std::vector<Violation> validate_instance(const ProblemInstance& inst) {
    std::vector<Violation> out;
    const auto& g = inst.grid;

    if (g.horizon_hours < 1)
        out.push_back({"grid.horizon_hours", "horizon_hours must be >= 1, got " +
                                             std::to_string(g.horizon_hours)});
    if (g.steps_per_hour < 1)
        out.push_back({"grid.steps_per_hour", "steps_per_hour must be >= 1, got " +
                                              std::to_string(g.steps_per_hour)});
    if (std::abs(g.steps_per_hour * g.dt_balancing - g.dt_dayahead) > 1e-12)
        out.push_back({"grid", "steps_per_hour * dt_balancing != dt_dayahead (" +
                               fmt(g.steps_per_hour * g.dt_balancing) + " vs " +
                               fmt(g.dt_dayahead) + ")"});
    if (!out.empty()) return out; // dimensions below depend on a sane grid

    const size_t T = static_cast<size_t>(g.total_steps());
    const size_t H = static_cast<size_t>(g.horizon_hours);
    const int S = inst.wind.n_scenarios();

    // Storage parameters
    const auto& ph = inst.phes;
    auto check_reservoir = [&](const std::string& name, double vmin, double vinit, double vmax) {
        if (!(0.0 <= vmin && vmin <= vinit && vinit <= vmax))
            out.push_back({"phes." + name,
                           name + " bounds violated: need 0 <= min <= init <= max, got min=" +
                               fmt(vmin) + " init=" + fmt(vinit) + " max=" + fmt(vmax)});
    };
    check_reservoir("v_upper", ph.v_upper_min, ph.v_upper_init, ph.v_upper_max);
    check_reservoir("v_lower", ph.v_lower_min, ph.v_lower_init, ph.v_lower_max);
    if (ph.sigma_pump <= 0.0)
        out.push_back({"phes.sigma_pump", "sigma_pump must be > 0, got " + fmt(ph.sigma_pump)});
    if (ph.sigma_release <= 0.0)
        out.push_back({"phes.sigma_release",
                       "sigma_release must be > 0, got " + fmt(ph.sigma_release)});
    if (ph.q_max <= 0.0)
        out.push_back({"phes.q_max", "q_max must be > 0, got " + fmt(ph.q_max)});
    check_series_len(out, "phes.rain", ph.rain, T);
    check_series_len(out, "phes.evap", ph.evap, T);
    check_nonneg(out, "phes.rain", ph.rain);
    check_nonneg(out, "phes.evap", ph.evap);

    // Wind scenarios
    if (S < 1)
        out.push_back({"wind", "at least one scenario required"});
    if (inst.wind.power.cols() != static_cast<int>(T))
        out.push_back({"wind.power", "scenario matrix has " +
                                     std::to_string(inst.wind.power.cols()) +
                                     " steps, expected " + std::to_string(T)});
    else {
        for (int s = 0; s < S; ++s)
            for (size_t t = 0; t < T; ++t) {
                double p = inst.wind.power.at(s, static_cast<int>(t));
                if (p < 0.0)
                    out.push_back({"wind.power", "wind power negative at (" +
                                                 std::to_string(s + 1) + "," +
                                                 std::to_string(t + 1) + "): " + fmt(p)});
                else if (p > inst.wind_capacity + 1e-9)
                    out.push_back({"wind.power", "wind power exceeds installed capacity at (" +
                                                 std::to_string(s + 1) + "," +
                                                 std::to_string(t + 1) + "): " + fmt(p)});
            }
    }
    check_series_len(out, "wind.base_power", inst.wind.base_power, T);

    // Prices
    check_series_len(out, "prices.dayahead", inst.prices.dayahead, H);
    if (inst.prices.dayahead.empty())
        out.push_back({"prices.dayahead", "day-ahead price series is empty"});
    check_nonneg(out, "prices.dayahead", inst.prices.dayahead);
    auto check_price_matrix = [&](const std::string& field, const Matrix& m) {
        if (m.rows() != S || m.cols() != static_cast<int>(T)) {
            out.push_back({field, field + " is " + std::to_string(m.rows()) + "x" +
                                  std::to_string(m.cols()) + ", expected " +
                                  std::to_string(S) + "x" + std::to_string(T)});
            return false;
        }
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < static_cast<int>(T); ++t)
                if (m.at(s, t) < 0.0)
                    out.push_back({field, field + " negative at (" + std::to_string(s + 1) +
                                          "," + std::to_string(t + 1) + "): " + fmt(m.at(s, t))});
        return true;
    };
    bool sell_ok = check_price_matrix("prices.balancing_sell", inst.prices.balancing_sell);
    bool buy_ok = check_price_matrix("prices.balancing_buy", inst.prices.balancing_buy);
    if (sell_ok && buy_ok) {
        for (int s = 0; s < S; ++s)
            for (int t = 0; t < static_cast<int>(T); ++t)
                if (inst.prices.balancing_sell.at(s, t) >
                    inst.prices.balancing_buy.at(s, t) + 1e-12)
                    out.push_back({"prices",
                                   "balancing_sell exceeds balancing_buy at (" +
                                       std::to_string(s + 1) + "," + std::to_string(t + 1) + ")"});
    }

    // Planned schedule
    check_series_len(out, "schedule.power", inst.schedule.power, H);
    if (inst.schedule.power.empty())
        out.push_back({"schedule.power", "planned schedule is empty"});
    check_nonneg(out, "schedule.power", inst.schedule.power);

    // Case configuration
    const auto& cc = inst.config;
    if (cc.case_id < 1 || cc.case_id > 4)
        out.push_back({"config.case_id", "case_id must be 1..4, got " +
                                         std::to_string(cc.case_id)});
    else {
        CaseConfig expect = CaseConfig::for_case(cc.case_id);
        if (cc.storage_enabled != expect.storage_enabled)
            out.push_back({"config.storage_enabled",
                           "storage_enabled inconsistent with case " +
                               std::to_string(cc.case_id)});
        if (cc.price_aware != expect.price_aware)
            out.push_back({"config.price_aware",
                           "price_aware inconsistent with case " + std::to_string(cc.case_id)});
    }
    if (cc.extended_constraints) {
        if (cc.sell_cap_peak <= 0.0)
            out.push_back({"config.sell_cap_peak",
                           "sell_cap_peak must be > 0 under extended constraints"});
        if (cc.sell_cap_offpeak <= 0.0)
            out.push_back({"config.sell_cap_offpeak",
                           "sell_cap_offpeak must be > 0 under extended constraints"});
    }
    if (!(cc.load_scale > 0.0))
        out.push_back({"config.load_scale", "load_scale must be > 0, got " + fmt(cc.load_scale)});
    if (inst.wind_capacity <= 0.0)
        out.push_back({"wind_capacity", "wind_capacity must be > 0, got " +
                                        fmt(inst.wind_capacity)});
    return out;
}

PhesParams load_phes_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open storage parameter file: " + path);
    PhesParams p;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), '=', ' ');
        std::istringstream is(line);
        std::string key;
        if (!(is >> key)) continue;
        double value;
        if (!(is >> value))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected numeric value for key '" + key + "'");
        if (key == "v_upper_init") p.v_upper_init = value;
        else if (key == "v_upper_min") p.v_upper_min = value;
        else if (key == "v_upper_max") p.v_upper_max = value;
        else if (key == "v_lower_init") p.v_lower_init = value;
        else if (key == "v_lower_min") p.v_lower_min = value;
        else if (key == "v_lower_max") p.v_lower_max = value;
        else if (key == "sigma_pump") p.sigma_pump = value;
        else if (key == "sigma_release") p.sigma_release = value;
        else if (key == "q_max") p.q_max = value;
        else
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": unknown key '" + key + "'");
    }
    return p;
}

} // namespace phes
