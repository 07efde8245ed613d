#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "phesopt/runner.hpp"
#include "phesopt/types.hpp"

#include <filesystem>
#include <fstream>

using namespace phes;

namespace {

// Minimal consistent instance used as the mutation baseline.
ProblemInstance small_instance() {
    ProblemInstance inst;
    inst.grid = TimeGrid{2, 2, 1.0, 0.5};
    const int T = inst.grid.total_steps();
    const int S = 2;
    inst.wind.power = Matrix(S, T, 1.0);
    inst.wind.base_power = Series(static_cast<size_t>(T), 1.0);
    inst.prices.dayahead = {100.0, 90.0};
    inst.prices.balancing_sell = Matrix(S, T, 80.0);
    inst.prices.balancing_buy = Matrix(S, T, 80.0);
    inst.schedule.power = {1.0, 1.0};
    inst.config = CaseConfig::for_case(1);
    inst.wind_capacity = 3.0;
    return inst;
}

} // namespace

TEST_CASE("hour_of_step boundaries") {
    TimeGrid g{24, 4, 1.0, 0.25};
    // 1-based steps 1,4,5 map to hours 1,1,2; 0-based equivalents below.
    CHECK(hour_of_step(0, g) == 0);
    CHECK(hour_of_step(3, g) == 0);
    CHECK(hour_of_step(4, g) == 1);
    CHECK(hour_of_step(95, g) == 23);
    CHECK_THROWS_AS(hour_of_step(96, g), std::out_of_range);
    CHECK_THROWS_AS(hour_of_step(-1, g), std::out_of_range);
}

TEST_CASE("hour_of_step visits each hour steps_per_hour times") {
    TimeGrid g{24, 4, 1.0, 0.25};
    std::vector<int> counts(24, 0);
    for (int t = 0; t < g.total_steps(); ++t) ++counts[static_cast<size_t>(hour_of_step(t, g))];
    for (int c : counts) CHECK(c == g.steps_per_hour);
}

TEST_CASE("validate_instance accepts a consistent instance and is idempotent") {
    ProblemInstance inst = small_instance();
    CHECK(validate_instance(inst).empty());
    CHECK(validate_instance(inst).empty());
}

TEST_CASE("validate_instance flags sell price above buy price with position") {
    ProblemInstance inst = small_instance();
    inst.prices.balancing_sell.at(0, 2) = 120.0;
    inst.prices.balancing_buy.at(0, 2) = 100.0;
    auto v = validate_instance(inst);
    REQUIRE(v.size() == 1);
    CHECK(v[0].message == "balancing_sell exceeds balancing_buy at (1,3)");
}

TEST_CASE("validate_instance collects multiple violations") {
    ProblemInstance inst = small_instance();
    inst.phes.rain = {0.0, 0.0, 0.0}; // wrong length (T=4)
    inst.phes.sigma_pump = -1.0;
    inst.wind.power.at(1, 0) = 99.0; // above capacity
    auto v = validate_instance(inst);
    CHECK(v.size() == 3);
}

TEST_CASE("storage defaults from the bundled parameter file pass validation") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "phesopt_table1_test";
    write_fixture(dir.string());
    PhesParams p = load_phes_params((dir / "phes_table1").string());
    CHECK(p.v_upper_init == 50.0);
    CHECK(p.v_upper_max == 100.0);
    CHECK(p.v_upper_min == 10.0);
    CHECK(p.v_lower_init == 50.0);
    CHECK(p.sigma_pump == 1.2);
    CHECK(p.sigma_release == 0.8);
    CHECK(p.q_max == 20.0);

    ProblemInstance inst = small_instance();
    inst.phes = p;
    CHECK(validate_instance(inst).empty());
    fs::remove_all(dir);
}

TEST_CASE("case configs follow the comparison matrix") {
    CHECK(CaseConfig::for_case(1).storage_enabled == false);
    CHECK(CaseConfig::for_case(1).price_aware == true);
    CHECK(CaseConfig::for_case(2).load_scale == 0.8);
    CHECK(CaseConfig::for_case(3).storage_enabled == true);
    CHECK(CaseConfig::for_case(3).price_aware == false);
    CHECK(CaseConfig::for_case(4).storage_enabled == true);
    CHECK(CaseConfig::for_case(4).price_aware == true);
    CHECK_THROWS(CaseConfig::for_case(5));
}

TEST_CASE("sell cap windowing") {
    CaseConfig c = CaseConfig::for_case(4);
    c.extended_constraints = true;
    CHECK(c.sell_cap_at_hour(9) == 2.0);
    CHECK(c.sell_cap_at_hour(20) == 2.0);
    CHECK(c.sell_cap_at_hour(21) == 0.5);
    CHECK(c.sell_cap_at_hour(8) == 0.5);
    c.extended_constraints = false;
    CHECK(c.sell_cap_at_hour(12) == kInf);
}
