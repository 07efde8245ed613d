#include "phesopt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace phes {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

bool is_missing(const std::string& field) {
    if (field.empty()) return true;
    std::string f = field;
    std::transform(f.begin(), f.end(), f.begin(), ::tolower);
    return f == "na" || f == "nan" || f == "null";
}

} // namespace

double PowerCurve::power_at(double speed_mps) const {
    if (speed_mps < cut_in || speed_mps >= cut_out) return 0.0;
    if (speed_mps >= rated_speed) return rated_power;
    if (points.empty()) return 0.0;
    if (speed_mps <= points.front().first) {
        // Between cut-in and the first breakpoint.
        if (points.front().first <= cut_in) return points.front().second;
        double f = (speed_mps - cut_in) / (points.front().first - cut_in);
        return f * points.front().second;
    }
    for (size_t i = 1; i < points.size(); ++i) {
        if (speed_mps <= points[i].first) {
            auto [s0, p0] = points[i - 1];
            auto [s1, p1] = points[i];
            return p0 + (p1 - p0) * (speed_mps - s0) / (s1 - s0);
        }
    }
    return points.back().second;
}

SpeedSeries load_wind_speeds(const std::string& path, double expected_step_minutes) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open wind speed file: " + path);
    SpeedSeries out;
    out.step_minutes = expected_step_minutes;
    std::string line;
    int lineno = 0;
    int gap = 0;
    bool have_value = false;
    double last_value = 0.0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line.find("timestamp") == std::string::npos)
                throw std::runtime_error(path + ":1: expected header 'timestamp,speed_mps'");
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 2 fields, got " + std::to_string(fields.size()));
        if (is_missing(fields[1])) {
            if (!have_value)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": missing value with no prior sample to fill from");
            if (++gap > 3)
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": more than 3 consecutive missing samples");
            out.timestamps.push_back(fields[0]);
            out.speeds.push_back(last_value);
            continue;
        }
        double v;
        try {
            size_t pos = 0;
            v = std::stod(fields[1], &pos);
            if (pos != fields[1].size()) throw std::invalid_argument(fields[1]);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": cannot parse speed '" + fields[1] + "'");
        }
        if (v < 0.0)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": negative wind speed " + fields[1]);
        gap = 0;
        have_value = true;
        last_value = v;
        out.timestamps.push_back(fields[0]);
        out.speeds.push_back(v);
    }
    if (out.speeds.empty()) throw std::runtime_error(path + ": no data rows");
    return out;
}

SpeedSeries resample_to_balancing(const SpeedSeries& s, const TimeGrid& grid) {
    const double target_minutes = grid.dt_balancing * 60.0;
    const double ratio = target_minutes / s.step_minutes;
    const int per_step = static_cast<int>(std::lround(ratio));
    if (per_step < 1 || std::abs(ratio - per_step) > 1e-9)
        throw std::runtime_error("input spacing " + std::to_string(s.step_minutes) +
                                 " min does not divide the balancing step");
    const int T = grid.total_steps();
    if (static_cast<int>(s.speeds.size()) != T * per_step)
        throw std::runtime_error("wind series has " + std::to_string(s.speeds.size()) +
                                 " samples, grid needs " + std::to_string(T * per_step));
    SpeedSeries out;
    out.step_minutes = target_minutes;
    out.speeds.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
        double sum = 0.0;
        for (int k = 0; k < per_step; ++k)
            sum += s.speeds[static_cast<size_t>(t * per_step + k)];
        out.speeds[static_cast<size_t>(t)] = sum / per_step;
    }
    return out;
}

PowerCurve load_power_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open power curve file: " + path);
    PowerCurve c;
    c.points.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line.find("speed_mps") == std::string::npos)
                throw std::runtime_error(path + ":1: expected header 'speed_mps,power_mw'");
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 2 fields");
        c.points.emplace_back(std::stod(fields[0]), std::stod(fields[1]));
    }
    if (c.points.size() < 2) throw std::runtime_error(path + ": need at least 2 breakpoints");
    for (size_t i = 0; i < c.points.size(); ++i) {
        if (c.points[i].second < 0.0)
            throw std::runtime_error(path + ": negative power at breakpoint " +
                                     std::to_string(i + 1));
        if (i > 0 && c.points[i].first <= c.points[i - 1].first)
            throw std::runtime_error(path + ": breakpoint speeds must be strictly increasing");
    }
    c.cut_in = c.points.front().first;
    c.cut_out = c.points.back().first;
    c.rated_power = 0.0;
    for (auto& [sp, pw] : c.points) c.rated_power = std::max(c.rated_power, pw);
    c.rated_speed = c.cut_out;
    for (auto& [sp, pw] : c.points)
        if (pw >= c.rated_power - 1e-12) {
            c.rated_speed = sp;
            break;
        }
    for (size_t i = 1; i < c.points.size(); ++i)
        if (c.points[i].first <= c.rated_speed &&
            c.points[i].second < c.points[i - 1].second - 1e-12)
            throw std::runtime_error(path + ": power must be non-decreasing below rated speed");
    return c;
}

Series apply_power_curve(const SpeedSeries& s, const PowerCurve& curve, int n_turbines) {
    Series out(s.speeds.size());
    for (size_t i = 0; i < s.speeds.size(); ++i)
        out[i] = curve.power_at(s.speeds[i]) * n_turbines;
    return out;
}

RouletteWheel::RouletteWheel(int bins, double bound) {
    if (bins < 1 || bins % 2 == 0)
        throw std::invalid_argument("bin count must be a positive odd number, got " +
                                    std::to_string(bins));
    if (bound < 0.0 || bound > 1.0)
        throw std::invalid_argument("deviation bound must be in [0,1], got " +
                                    std::to_string(bound));
    centers_.resize(static_cast<size_t>(bins));
    probs_.resize(static_cast<size_t>(bins));
    cum_.resize(static_cast<size_t>(bins));
    const int k = (bins - 1) / 2;
    double wsum = 0.0;
    for (int i = 0; i < bins; ++i) {
        centers_[static_cast<size_t>(i)] =
            (bins == 1) ? 0.0 : -bound + 2.0 * bound * i / (bins - 1);
        probs_[static_cast<size_t>(i)] = static_cast<double>(k + 1 - std::abs(i - k));
        wsum += probs_[static_cast<size_t>(i)];
    }
    double acc = 0.0;
    for (int i = 0; i < bins; ++i) {
        probs_[static_cast<size_t>(i)] /= wsum;
        acc += probs_[static_cast<size_t>(i)];
        cum_[static_cast<size_t>(i)] = acc;
    }
    cum_.back() = 1.0;
}

double RouletteWheel::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    auto it = std::lower_bound(cum_.begin(), cum_.end(), u);
    size_t i = static_cast<size_t>(it - cum_.begin());
    if (i >= centers_.size()) i = centers_.size() - 1;
    return centers_[i];
}

double RouletteWheel::mean_abs_deviation() const {
    double m = 0.0;
    for (size_t i = 0; i < centers_.size(); ++i) m += probs_[i] * std::abs(centers_[i]);
    return m;
}

Matrix perturb_series(const Series& base, int n_scenarios, const RouletteWheel& wheel,
                      uint64_t seed, uint64_t stream, double clip_max) {
    if (n_scenarios < 1) throw std::invalid_argument("need at least one scenario");
    const int T = static_cast<int>(base.size());
    Matrix out(n_scenarios, T);
    for (int t = 0; t < T; ++t)
        out.at(0, t) = std::clamp(base[static_cast<size_t>(t)], 0.0, clip_max);
    for (int s = 1; s < n_scenarios; ++s) {
        std::seed_seq sseq{static_cast<uint64_t>(seed), stream, static_cast<uint64_t>(s)};
        std::mt19937_64 rng(sseq);
        for (int t = 0; t < T; ++t) {
            double dev = wheel.sample(rng);
            out.at(s, t) = std::clamp(base[static_cast<size_t>(t)] * (1.0 + dev), 0.0, clip_max);
        }
    }
    return out;
}

WindScenarioSet generate_scenarios(const Series& base_power, const GeneratorSpec& spec,
                                   double wind_capacity) {
    RouletteWheel wheel(spec.bins, spec.deviation_bound);
    WindScenarioSet ws;
    ws.power = perturb_series(base_power, spec.n_scenarios, wheel, spec.seed, 1, wind_capacity);
    ws.base_power = base_power;
    return ws;
}

WindScenarioSet generate_scenarios_from_speeds(const SpeedSeries& speeds,
                                               const PowerCurve& curve, int n_turbines,
                                               const GeneratorSpec& spec) {
    RouletteWheel wheel(spec.bins, spec.deviation_bound);
    Matrix speed_mat = perturb_series(speeds.speeds, spec.n_scenarios, wheel, spec.seed, 1, kInf);
    const int T = speed_mat.cols();
    WindScenarioSet ws;
    ws.power = Matrix(spec.n_scenarios, T);
    for (int s = 0; s < spec.n_scenarios; ++s)
        for (int t = 0; t < T; ++t)
            ws.power.at(s, t) = curve.power_at(speed_mat.at(s, t)) * n_turbines;
    ws.base_power = ws.power.row(0);
    return ws;
}

PlannedSchedule day_ahead_schedule(const WindScenarioSet& ws, const TimeGrid& grid) {
    const int S = ws.n_scenarios();
    const int K = grid.steps_per_hour;
    if (ws.power.cols() != grid.total_steps())
        throw std::invalid_argument("scenario set does not match the time grid");
    PlannedSchedule out;
    out.power.resize(static_cast<size_t>(grid.horizon_hours));
    for (int h = 0; h < grid.horizon_hours; ++h) {
        double sum = 0.0;
        for (int s = 0; s < S; ++s)
            for (int k = 0; k < K; ++k) sum += ws.power.at(s, h * K + k);
        out.power[static_cast<size_t>(h)] = sum / (S * K);
    }
    return out;
}

std::pair<Matrix, Matrix> generate_balancing_prices(const Series& dayahead,
                                                    const GeneratorSpec& spec,
                                                    const TimeGrid& grid) {
    if (static_cast<int>(dayahead.size()) != grid.horizon_hours)
        throw std::invalid_argument("day-ahead series length != horizon hours");
    if (spec.price_spread < 0.0)
        throw std::invalid_argument("price spread must be >= 0");
    RouletteWheel wheel(spec.bins, spec.price_deviation_bound);
    const int T = grid.total_steps();
    Matrix sell(spec.n_scenarios, T), buy(spec.n_scenarios, T);
    for (int s = 0; s < spec.n_scenarios; ++s) {
        std::seed_seq sseq{static_cast<uint64_t>(spec.seed), uint64_t(2),
                           static_cast<uint64_t>(s)};
        std::mt19937_64 rng(sseq);
        for (int t = 0; t < T; ++t) {
            double base = dayahead[static_cast<size_t>(hour_of_step(t, grid))];
            double dev = wheel.sample(rng);
            double p = std::max(0.0, base * (1.0 + dev));
            sell.at(s, t) = p;
            buy.at(s, t) = p * (1.0 + spec.price_spread);
        }
    }
    return {std::move(sell), std::move(buy)};
}

Series load_dayahead_prices(const std::string& path, const TimeGrid& grid) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open day-ahead price file: " + path);
    Series out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1) {
            if (line.find("hour") == std::string::npos)
                throw std::runtime_error(path + ":1: expected header 'hour,price_tl_per_mwh'");
            continue;
        }
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 2)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 2 fields");
        out.push_back(std::stod(fields[1]));
    }
    if (static_cast<int>(out.size()) != grid.horizon_hours)
        throw std::runtime_error(path + ": expected " + std::to_string(grid.horizon_hours) +
                                 " hourly prices, got " + std::to_string(out.size()));
    return out;
}

} // namespace phes
