#include "phesopt/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIo = 4;

std::vector<int> parse_case_list(const std::string& cases) {
    std::vector<int> out;
    std::istringstream is(cases);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        int c = std::stoi(tok);
        if (c < 1 || c > 4) throw CLI::ValidationError("cases", "case ids must be in 1..4");
        out.push_back(c);
    }
    if (out.empty()) throw CLI::ValidationError("cases", "no case ids given");
    return out;
}

int cmd_run(const std::string& config_path, const std::string& cases, bool extended,
            std::optional<uint64_t> seed, const std::string& out_override) {
    phes::RunConfig cfg = phes::load_run_config(config_path);
    if (extended) cfg.extended = true;
    if (seed) cfg.gen.seed = *seed;
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (const char* env = std::getenv("PHESOPT_TIME_LIMIT_SEC")) cfg.time_limit_sec = std::atof(env);

    std::vector<int> case_ids = parse_case_list(cases);
    phes::SharedInputs shared = phes::load_shared_inputs(cfg);

    std::vector<phes::CaseResult> results;
    for (int id : case_ids) {
        std::cout << "case " << id << (cfg.extended ? " (extended)" : "") << "..." << std::flush;
        results.push_back(phes::run_case(cfg, shared, id));
        const auto& r = results.back().report;
        std::cout << " profit " << r.profit << " TL, sold " << r.avg_sold_power << " MW, bought "
                  << r.avg_bought_power << " MW, " << r.wall_sec << " s"
                  << (r.optimal ? "" : " [gap " + std::to_string(r.max_gap) + "]") << "\n";
    }
    phes::emit_report(results, shared, cfg, cfg.out_dir);
    std::cout << "reports written to " << cfg.out_dir << "\n";
    return 0;
}

int cmd_gen_data(const std::string& out_dir) {
    phes::write_fixture(out_dir);
    std::cout << "fixture written to " << out_dir << "\n";
    return 0;
}

int cmd_solve(const std::string& problem_path) {
    std::ifstream in(problem_path);
    if (!in) throw std::runtime_error("cannot open problem dump: " + problem_path);
    std::stringstream buf;
    buf << in.rdbuf();
    auto [lp, binaries] = phes::parse_lp_dump(buf.str());
    if (binaries.empty()) {
        phes::LpSolution s = phes::solve_lp(lp);
        switch (s.status) {
            case phes::LpStatus::Optimal:
                std::cout << "status optimal\nobjective " << s.objective_value << "\n";
                for (int j = 0; j < lp.n_vars; ++j)
                    std::cout << "x" << j << " " << s.x[static_cast<size_t>(j)] << "\n";
                return 0;
            case phes::LpStatus::Infeasible:
                std::cout << "status infeasible\ninfeasibility " << s.infeasibility << "\n";
                return kExitSolver;
            case phes::LpStatus::Unbounded:
                std::cout << "status unbounded\nray x" << s.unbounded_ray << "\n";
                return kExitSolver;
        }
    }
    phes::MilpProblem mp{std::move(lp), std::move(binaries)};
    phes::MilpSolution s = phes::solve_milp(mp);
    if (!s.has_incumbent) {
        std::cout << "status "
                  << (s.status == phes::MilpStatus::Infeasible ? "infeasible" : "no incumbent")
                  << "\n";
        return kExitSolver;
    }
    std::cout << "status " << (s.status == phes::MilpStatus::Optimal ? "optimal" : "incumbent")
              << "\nobjective " << s.objective_value << "\nnodes " << s.nodes_explored
              << "\ngap " << s.gap << "\n";
    for (int j = 0; j < mp.lp.n_vars; ++j)
        std::cout << "x" << j << " " << s.x[static_cast<size_t>(j)] << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wind + pumped-hydro market dispatch optimizer"};
    app.require_subcommand(1);

    std::string config_path, cases = "1,2,3,4", out_override, gen_out = "data", problem_path;
    bool extended = false;
    std::optional<uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run the comparison cases and write reports");
    run->add_option("--config", config_path, "Run configuration file")->required();
    run->add_option("--cases", cases, "Comma-separated case ids (default 1,2,3,4)");
    run->add_flag("--extended", extended, "Enable sell caps and reservoir restoration");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out_override, "Override the output directory");

    auto* gen = app.add_subcommand("gen-data", "Emit the bundled synthetic fixture");
    gen->add_option("--out", gen_out, "Output directory")->required();

    auto* solve = app.add_subcommand("solve", "Solve a single LP/MILP debug dump");
    solve->add_option("--problem", problem_path, "Problem dump file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, cases, extended, seed, out_override);
        if (gen->parsed()) return cmd_gen_data(gen_out);
        if (solve->parsed()) return cmd_solve(problem_path);
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::runtime_error& e) {
        std::string msg = e.what();
        if (msg.find("validation") != std::string::npos) {
            std::cerr << "validation error: " << msg << "\n";
            return kExitValidation;
        }
        bool io = msg.find("cannot open") != std::string::npos ||
                  msg.find("cannot write") != std::string::npos;
        std::cerr << (io ? "i/o error: " : "error: ") << msg << "\n";
        return io ? kExitIo : kExitSolver;
    }
    return 1;
}
