#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "mkteq/scenario.hpp"

namespace {

enum ExitCode { ok = 0, failure = 1, config_error = 2, validation_error = 3, io_error = 4 };

mkteq::ScenarioConfig load_with_overrides(const std::string& config_path, std::uint64_t* seed,
                                          int* grid_steps, int* mc_paths,
                                          const std::string& regimes) {
    mkteq::ScenarioConfig config = mkteq::load_config(config_path);
    if (seed) config.run.seed = *seed;
    if (grid_steps) config.grid_steps = *grid_steps;
    if (mc_paths) config.run.mc_paths = *mc_paths;
    if (!regimes.empty()) {
        config.run.regimes.clear();
        std::size_t pos = 0;
        while (pos != std::string::npos) {
            const std::size_t comma = regimes.find(',', pos);
            const std::string name = regimes.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            config.run.regimes.push_back(mkteq::regime_from_name(name));
            pos = comma == std::string::npos ? std::string::npos : comma + 1;
        }
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"market equilibria with price impact and quadratic trading costs"};
    app.require_subcommand(1);

    std::string config_path, out_dir, regimes, sweep_parameter;
    std::uint64_t seed = 0;
    int grid_steps = 0, mc_paths = 0;
    bool serial = false;
    std::vector<double> sweep_values;

    bool has_seed = false, has_steps = false, has_paths = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "scenario config (JSON)")
            ->required()
            ->envname("MKTEQ_CONFIG");
        cmd->add_option("--seed", seed, "override run.seed")
            ->envname("MKTEQ_SEED")
            ->each([&](const std::string&) { has_seed = true; });
        cmd->add_option("--grid-steps", grid_steps, "override market.grid_steps")
            ->envname("MKTEQ_GRID_STEPS")
            ->each([&](const std::string&) { has_steps = true; });
        cmd->add_option("--mc-paths", mc_paths, "override run.mc_paths")
            ->envname("MKTEQ_MC_PATHS")
            ->each([&](const std::string&) { has_paths = true; });
        cmd->add_option("--regimes", regimes, "comma list overriding run.regimes")
            ->envname("MKTEQ_REGIMES");
        cmd->add_flag("--serial", serial, "disable the OpenMP kernels")
            ->envname("MKTEQ_SERIAL");
    };

    CLI::App* run = app.add_subcommand("run", "compute the configured regimes");
    add_common(run);
    run->add_option("--out", out_dir, "output directory")->required()->envname("MKTEQ_OUT");

    CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter");
    add_common(sweep);
    sweep->add_option("--out", out_dir, "output directory")->required()->envname("MKTEQ_OUT");
    sweep->add_option("--parameter", sweep_parameter,
                      "lambda_scale | n_investors | delta1 (defaults to run.sweep)");
    sweep->add_option("--values", sweep_values, "sweep values (defaults to run.sweep)");

    CLI::App* oracle = app.add_subcommand("oracle-check",
                                          "cross-check closed forms against brute force");
    add_common(oracle);
    oracle->add_option("--out", out_dir, "optional directory for oracle_report.json");

    CLI::App* tmpl = app.add_subcommand("print-config-template", "print a starter config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (tmpl->parsed()) {
            std::cout << mkteq::config_template();
            return ok;
        }

        const mkteq::Exec exec = serial ? mkteq::Exec::serial : mkteq::default_exec();
        mkteq::ScenarioConfig config =
            load_with_overrides(config_path, has_seed ? &seed : nullptr,
                                has_steps ? &grid_steps : nullptr,
                                has_paths ? &mc_paths : nullptr, regimes);

        if (run->parsed()) {
            mkteq::RunReport report = mkteq::run_scenario(config, out_dir, exec);
            std::cout << mkteq::summary_json(report);
            std::fprintf(stderr, "elapsed_ms %.3f\n", report.elapsed_ms);
            return ok;
        }
        if (sweep->parsed()) {
            mkteq::SweepDef def;
            if (!sweep_parameter.empty()) {
                def.parameter = sweep_parameter;
                def.values = sweep_values;
            } else if (config.run.sweep) {
                def = *config.run.sweep;
            } else {
                std::cerr << "no sweep given on the command line or in the config\n";
                return config_error;
            }
            mkteq::SweepReport report = mkteq::run_sweep(config, def, out_dir, exec);
            std::cout << "sweep " << def.parameter << ": " << report.rows.size() << " rows";
            if (report.loglog_slope) {
                std::cout << ", log-log slope " << *report.loglog_slope;
            }
            if (report.coefficient_max_error) {
                std::cout << ", coefficient max error " << *report.coefficient_max_error;
            }
            std::cout << "\n";
            return ok;
        }
        if (oracle->parsed()) {
            mkteq::OracleCheckReport report = mkteq::run_oracle_check(config, exec);
            for (const auto& check : report.checks) {
                std::printf("[%s] %s gap=%.3e tol=%.1e\n", check.pass ? "PASS" : "FAIL",
                            check.name.c_str(), check.gap, check.tol);
            }
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream out(std::filesystem::path(out_dir) / "oracle_report.json",
                                  std::ios::binary);
                out << mkteq::oracle_report_json(report);
            }
            return report.all_pass ? ok : failure;
        }
    } catch (const mkteq::ConfigParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const mkteq::IoFailure& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return io_error;
    } catch (const mkteq::ModelError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return validation_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
