#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phesopt/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace phes;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct FixtureDir {
    fs::path dir;
    explicit FixtureDir(const std::string& name) : dir(fs::temp_directory_path() / name) {
        fs::remove_all(dir);
        write_fixture(dir.string());
    }
    ~FixtureDir() { fs::remove_all(dir); }
};

} // namespace

TEST_CASE("config parsing") {
    FixtureDir fx("phesopt_cfg_test");
    RunConfig cfg = load_run_config((fx.dir / "config.ini").string());
    CHECK(cfg.grid.horizon_hours == 24);
    CHECK(cfg.grid.steps_per_hour == 4);
    CHECK(cfg.grid.dt_balancing == doctest::Approx(0.25));
    CHECK(cfg.gen.n_scenarios == 10);
    CHECK(cfg.gen.seed == 42);
    CHECK(cfg.sell_cap_peak == 2.0);
    CHECK(cfg.sell_cap_offpeak == 0.5);
    CHECK(cfg.peak_window_start_hour == 13);
    CHECK(cfg.peak_window_end_hour == 17);
    // Relative paths resolve against the config file's directory.
    CHECK(fs::path(cfg.wind_csv).parent_path() == fx.dir);
    CHECK(fs::exists(cfg.wind_csv));

    SUBCASE("unknown keys are rejected") {
        fs::path bad = fx.dir / "bad.ini";
        std::ofstream(bad) << slurp(fx.dir / "config.ini") << "mystery_knob = 3\n";
        CHECK_THROWS_WITH_AS(load_run_config(bad.string()),
                             doctest::Contains("mystery_knob"), std::runtime_error);
    }
    SUBCASE("missing required paths are rejected") {
        fs::path bad = fx.dir / "empty.ini";
        std::ofstream(bad) << "horizon_hours = 24\n";
        CHECK_THROWS_AS(load_run_config(bad.string()), std::runtime_error);
    }
}

TEST_CASE("case comparison percentages") {
    std::vector<CaseReport> reports(2);
    reports[0].case_id = 1;
    reports[0].profit = 100.0;
    reports[1].case_id = 4;
    reports[1].profit = 131.61;
    compare_cases(reports);
    CHECK_FALSE(reports[0].profit_increase_pct.has_value());
    REQUIRE(reports[1].profit_increase_pct.has_value());
    CHECK(*reports[1].profit_increase_pct == doctest::Approx(31.61));

    SUBCASE("equal profits give zero increase") {
        reports[1].profit = 100.0;
        compare_cases(reports);
        CHECK(*reports[1].profit_increase_pct == doctest::Approx(0.0));
    }
    SUBCASE("zero baseline leaves the percentage unset") {
        reports[0].profit = 0.0;
        compare_cases(reports);
        CHECK_FALSE(reports[1].profit_increase_pct.has_value());
    }
    SUBCASE("missing case 1 is an error") {
        reports.erase(reports.begin());
        CHECK_THROWS_AS(compare_cases(reports), std::runtime_error);
    }
}

TEST_CASE("peak window energy arithmetic") {
    TimeGrid grid{24, 4, 1.0, 0.25};
    DispatchSolution d;
    d.scenarios.resize(1);
    auto& sc = d.scenarios[0];
    sc.release.assign(static_cast<size_t>(grid.total_steps()), 2.0);
    // 4-hour window, 16 quarter steps at 2 MW.
    CHECK(peak_window_energy(d, 13, 17, grid) == doctest::Approx(8.0));

    sc.release.assign(static_cast<size_t>(grid.total_steps()), 0.0);
    CHECK(peak_window_energy(d, 13, 17, grid) == doctest::Approx(0.0));

    DispatchSolution empty;
    CHECK(peak_window_energy(empty, 13, 17, grid) == 0.0);
}

TEST_CASE("end-to-end report emission on a small run") {
    FixtureDir fx("phesopt_e2e_test");
    RunConfig cfg = load_run_config((fx.dir / "config.ini").string());
    cfg.gen.n_scenarios = 2; // keep the unit test quick
    SharedInputs shared = load_shared_inputs(cfg);
    CHECK(shared.wind.n_scenarios() == 2);
    CHECK(shared.wind.power.cols() == 96);
    CHECK(shared.prices.dayahead.size() == 24);

    std::vector<CaseResult> results;
    results.push_back(run_case(cfg, shared, 1));
    results.push_back(run_case(cfg, shared, 3));
    CHECK(results[1].report.profit >= results[0].report.profit - 1e-7);

    fs::path out1 = fx.dir / "out1";
    fs::path out2 = fx.dir / "out2";
    emit_report(results, shared, cfg, out1.string());
    emit_report(results, shared, cfg, out2.string());

    const char* top_files[] = {"table3.csv", "summary.json", "manifest.txt"};
    const char* case_files[] = {"dispatch.csv", "balancing_exchange.csv", "pump_turbine.csv",
                                "reservoir_volumes.csv", "peak_window_supply.csv"};
    for (const char* f : top_files) {
        CHECK(fs::exists(out1 / f));
        CHECK(slurp(out1 / f) == slurp(out2 / f)); // byte-identical rerun
    }
    for (int id : {1, 3})
        for (const char* f : case_files) {
            fs::path p = out1 / std::to_string(id) / f;
            CHECK(fs::exists(p));
            CHECK(slurp(p) == slurp(out2 / std::to_string(id) / f));
        }

    // dispatch.csv row count: header + S * T.
    std::string dispatch = slurp(out1 / "1" / "dispatch.csv");
    size_t lines = static_cast<size_t>(std::count(dispatch.begin(), dispatch.end(), '\n'));
    CHECK(lines == 1 + 2 * 96);

    SUBCASE("empty report list is rejected") {
        std::vector<CaseResult> none;
        CHECK_THROWS_AS(emit_report(none, shared, cfg, (fx.dir / "out3").string()),
                        std::runtime_error);
        CHECK_FALSE(fs::exists(fx.dir / "out3" / "summary.json"));
    }
}
