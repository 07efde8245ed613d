#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace phes {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Series = std::vector<double>;

// Row-major S x T matrix used for scenario-indexed series.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& at(int r, int c) { return data_[index(r, c)]; }
    double at(int r, int c) const { return data_[index(r, c)]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Series row(int r) const {
        Series out(static_cast<size_t>(cols_));
        for (int c = 0; c < cols_; ++c) out[static_cast<size_t>(c)] = at(r, c);
        return out;
    }

private:
    size_t index(int r, int c) const {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw std::out_of_range("Matrix index (" + std::to_string(r) + "," +
                                    std::to_string(c) + ") out of range");
        return static_cast<size_t>(r) * cols_ + c;
    }
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

struct TimeGrid {
    int horizon_hours = 24;
    int steps_per_hour = 4;
    double dt_dayahead = 1.0;   // hours
    double dt_balancing = 0.25; // hours

    int total_steps() const { return horizon_hours * steps_per_hour; }
};

// Maps a 0-based balancing step to its 0-based hour.
inline int hour_of_step(int t, const TimeGrid& grid) {
    if (t < 0 || t >= grid.total_steps())
        throw std::out_of_range("step index " + std::to_string(t) +
                                " outside [0," + std::to_string(grid.total_steps()) + ")");
    return t / grid.steps_per_hour;
}

struct PhesParams {
    double v_upper_init = 50.0;
    double v_upper_min = 10.0;
    double v_upper_max = 100.0;
    double v_lower_init = 50.0;
    double v_lower_min = 10.0;
    double v_lower_max = 100.0;
    double sigma_pump = 1.2;    // MW per (Hm3/h)
    double sigma_release = 0.8; // MW per (Hm3/h)
    double q_max = 20.0;        // Hm3/h
    Series rain;                // Hm3 per step; empty means all zero
    Series evap;                // Hm3 per step; empty means all zero

    double rain_at(int t) const { return rain.empty() ? 0.0 : rain[static_cast<size_t>(t)]; }
    double evap_at(int t) const { return evap.empty() ? 0.0 : evap[static_cast<size_t>(t)]; }
};

struct WindScenarioSet {
    Matrix power;      // S x T, MW
    Series base_power; // length T, MW (scenario 0 is the measured series)

    int n_scenarios() const { return power.rows(); }
};

struct PriceSet {
    Series dayahead;        // length H, TL/MWh
    Matrix balancing_sell;  // S x T, TL/MWh
    Matrix balancing_buy;   // S x T, TL/MWh
};

struct PlannedSchedule {
    Series power; // length H, MW, constant within each hour
};

struct CaseConfig {
    int case_id = 1;
    double load_scale = 1.0;
    bool storage_enabled = false;
    bool price_aware = true;
    bool extended_constraints = false;
    double sell_cap_peak = 2.0;    // MW
    double sell_cap_offpeak = 0.5; // MW
    int cap_window_start_hour = 9;
    int cap_window_end_hour = 21; // [start, end)
    bool restore_lower_reservoir = false;
    bool case3_use_flat_price_milp = false;

    double sell_cap_at_hour(int hour) const {
        if (!extended_constraints) return kInf;
        return (hour >= cap_window_start_hour && hour < cap_window_end_hour)
                   ? sell_cap_peak
                   : sell_cap_offpeak;
    }

    static CaseConfig for_case(int case_id);
};

struct ProblemInstance {
    TimeGrid grid;
    PhesParams phes;
    WindScenarioSet wind;
    PriceSet prices;
    PlannedSchedule schedule;
    CaseConfig config;
    double wind_capacity = 3.0; // MW
};

struct Violation {
    std::string field;
    std::string message;
};

// Collects every invariant breach; empty result means the instance is valid.
std::vector<Violation> validate_instance(const ProblemInstance& inst);

// Loads the storage parameter file (key-value text, one pair per line).
PhesParams load_phes_params(const std::string& path);

} // namespace phes
