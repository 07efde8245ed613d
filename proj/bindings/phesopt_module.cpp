#include "phesopt/runner.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace phes;

namespace {

py::dict report_to_dict(const CaseReport& r) {
    py::dict d;
    d["case_id"] = r.case_id;
    d["avg_bought_power_mw"] = r.avg_bought_power;
    d["avg_sold_power_mw"] = r.avg_sold_power;
    d["profit_tl"] = r.profit;
    d["profit_increase_pct"] =
        r.profit_increase_pct ? py::object(py::float_(*r.profit_increase_pct)) : py::none();
    d["peak_window_energy_mwh"] = r.peak_window_energy_mwh;
    d["nodes_explored"] = r.nodes;
    d["max_gap"] = r.max_gap;
    d["optimal"] = r.optimal;
    return d;
}

py::list run_cases(const std::string& config_path, const std::vector<int>& case_ids,
                   bool extended, std::optional<uint64_t> seed,
                   std::optional<std::string> out_dir) {
    RunConfig cfg = load_run_config(config_path);
    if (extended) cfg.extended = true;
    if (seed) cfg.gen.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    SharedInputs shared = load_shared_inputs(cfg);

    std::vector<CaseResult> results;
    for (int id : case_ids) results.push_back(run_case(cfg, shared, id));

    std::vector<CaseReport> reports;
    for (const auto& r : results) reports.push_back(r.report);
    bool have_case1 = false;
    for (const auto& r : reports) have_case1 |= r.case_id == 1;
    if (have_case1) compare_cases(reports);
    if (out_dir) emit_report(results, shared, cfg, cfg.out_dir);

    py::list out;
    for (const auto& r : reports) out.append(report_to_dict(r));
    return out;
}

py::dict solve_dump(const std::string& dump_text) {
    auto [lp, binaries] = parse_lp_dump(dump_text);
    py::dict out;
    if (binaries.empty()) {
        LpSolution s = solve_lp(lp);
        out["status"] = s.status == LpStatus::Optimal     ? "optimal"
                        : s.status == LpStatus::Infeasible ? "infeasible"
                                                           : "unbounded";
        if (s.status == LpStatus::Optimal) {
            out["objective"] = s.objective_value;
            out["x"] = s.x;
        }
        return out;
    }
    MilpProblem mp{std::move(lp), std::move(binaries)};
    MilpSolution s = solve_milp(mp);
    out["status"] = s.status == MilpStatus::Optimal      ? "optimal"
                    : s.status == MilpStatus::Infeasible ? "infeasible"
                                                         : "time_limit";
    if (s.has_incumbent) {
        out["objective"] = s.objective_value;
        out["x"] = s.x;
        out["gap"] = s.gap;
        out["nodes"] = s.nodes_explored;
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_phesopt, m) {
    m.doc() = "Wind + pumped-hydro market dispatch optimizer";

    m.def("gen_data", [](const std::string& out_dir) { write_fixture(out_dir); },
          py::arg("out_dir"), "Write the bundled synthetic fixture (wind, prices, curve, config)");

    m.def("run_cases", &run_cases, py::arg("config_path"),
          py::arg("cases") = std::vector<int>{1, 2, 3, 4}, py::arg("extended") = false,
          py::arg("seed") = std::nullopt, py::arg("out_dir") = std::nullopt,
          "Run comparison cases; returns one summary dict per case. Writing reports requires "
          "out_dir.");

    m.def("solve_dump", &solve_dump, py::arg("dump_text"),
          "Solve an LP/MILP debug dump (text produced by the CLI or dump_lp)");

    py::class_<PowerCurve>(m, "PowerCurve")
        .def_readonly("cut_in", &PowerCurve::cut_in)
        .def_readonly("cut_out", &PowerCurve::cut_out)
        .def_readonly("rated_speed", &PowerCurve::rated_speed)
        .def_readonly("rated_power", &PowerCurve::rated_power)
        .def("power_at", &PowerCurve::power_at, py::arg("speed_mps"));

    m.def("load_power_curve", &load_power_curve, py::arg("path"));
}
