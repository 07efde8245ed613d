#pragma once

#include "phesopt/market.hpp"
#include "phesopt/scenario.hpp"
#include "phesopt/types.hpp"

#include <optional>

namespace phes {

struct RunConfig {
    std::string wind_csv;
    std::string dayahead_csv;
    std::string power_curve_csv;
    std::string phes_params_file;
    TimeGrid grid;
    GeneratorSpec gen;
    int n_turbines = 1;
    double wind_speed_step_minutes = 5.0;
    double rain_per_step = 0.0; // Hm3
    double evap_per_step = 0.0; // Hm3
    double sell_cap_peak = 2.0;
    double sell_cap_offpeak = 0.5;
    int cap_window_start_hour = 9;
    int cap_window_end_hour = 21;
    int peak_window_start_hour = 13;
    int peak_window_end_hour = 17;
    bool extended = false;
    bool case3_use_flat_price_milp = false;
    double time_limit_sec = 60.0;
    long node_limit = 200000;
    std::string out_dir = "out";
};

RunConfig load_run_config(const std::string& path);

// Everything the four cases share for one (config, seed) pair.
struct SharedInputs {
    TimeGrid grid;
    PhesParams phes;
    WindScenarioSet wind;
    PriceSet prices;
    PlannedSchedule schedule;
    double wind_capacity = 0.0;
};

SharedInputs load_shared_inputs(const RunConfig& cfg);

ProblemInstance make_instance(const RunConfig& cfg, const SharedInputs& shared, int case_id);

struct CaseReport {
    int case_id = 0;
    double avg_bought_power = 0.0; // scenario mean of sum_t p_bought
    double avg_sold_power = 0.0;
    double profit = 0.0;                          // TL, scenario mean
    std::optional<double> profit_increase_pct;    // vs case 1; unset for case 1
    double peak_window_energy_mwh = 0.0;
    long nodes = 0;
    double wall_sec = 0.0;
    double max_gap = 0.0;
    bool optimal = true;
};

struct CaseResult {
    CaseReport report;
    DispatchSolution dispatch;
};

CaseResult run_case(const RunConfig& cfg, const SharedInputs& shared, int case_id);

// Fills profit_increase_pct in place; requires case 1 to be present.
void compare_cases(std::vector<CaseReport>& reports);

double peak_window_energy(const DispatchSolution& d, int start_hour, int end_hour,
                          const TimeGrid& grid);

void emit_report(const std::vector<CaseResult>& results, const SharedInputs& shared,
                 const RunConfig& cfg, const std::string& out_dir);

// Writes the bundled synthetic fixture (wind, prices, power curve, storage
// parameters, config) into a directory.
void write_fixture(const std::string& out_dir);

} // namespace phes
