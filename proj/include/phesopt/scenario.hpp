#pragma once

#include "phesopt/types.hpp"

#include <random>
#include <utility>

namespace phes {

struct SpeedSeries {
    std::vector<std::string> timestamps; // may be empty after resampling
    Series speeds;                       // m/s
    double step_minutes = 5.0;
};

struct PowerCurve {
    std::vector<std::pair<double, double>> points; // (speed m/s, power MW), increasing speed
    double cut_in = 4.0;
    double cut_out = 25.0;
    double rated_speed = 15.0;
    double rated_power = 3.0;

    double power_at(double speed_mps) const;
};

struct GeneratorSpec {
    int n_scenarios = 10;
    uint64_t seed = 1;
    int bins = 9;                  // odd bin count of the deviation histogram
    double deviation_bound = 0.2;  // multiplicative deviation span [-b, +b]
    double price_deviation_bound = 0.2;
    double price_spread = 0.0;     // buy = sell * (1 + spread)
};

// Discretized symmetric triangular deviation distribution sampled by
// cumulative-probability (roulette wheel) selection.
class RouletteWheel {
public:
    RouletteWheel(int bins, double bound);
    double sample(std::mt19937_64& rng) const;
    double mean_abs_deviation() const; // analytic, for tests
    const Series& bin_centers() const { return centers_; }
    const Series& bin_probs() const { return probs_; }

private:
    Series centers_, probs_, cum_;
};

SpeedSeries load_wind_speeds(const std::string& path, double expected_step_minutes = 5.0);
SpeedSeries resample_to_balancing(const SpeedSeries& s, const TimeGrid& grid);
PowerCurve load_power_curve(const std::string& path);
Series apply_power_curve(const SpeedSeries& s, const PowerCurve& curve, int n_turbines);

// Scenario 0 is the base series unchanged; the rest carry per-step
// multiplicative roulette-wheel deviations, clipped to [0, clip_max].
Matrix perturb_series(const Series& base, int n_scenarios, const RouletteWheel& wheel,
                      uint64_t seed, uint64_t stream, double clip_max);

WindScenarioSet generate_scenarios(const Series& base_power, const GeneratorSpec& spec,
                                   double wind_capacity);

// Speed-space variant: perturbs speeds, then converts each scenario through the
// power curve.
WindScenarioSet generate_scenarios_from_speeds(const SpeedSeries& speeds,
                                               const PowerCurve& curve, int n_turbines,
                                               const GeneratorSpec& spec);

PlannedSchedule day_ahead_schedule(const WindScenarioSet& ws, const TimeGrid& grid);

std::pair<Matrix, Matrix> generate_balancing_prices(const Series& dayahead,
                                                    const GeneratorSpec& spec,
                                                    const TimeGrid& grid);

Series load_dayahead_prices(const std::string& path, const TimeGrid& grid);

} // namespace phes
