#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <algorithm>
#include <sstream>
#ifdef MKTEQ_CLI
#include <sys/wait.h>
#endif

#include "doctest.h"
#include "json.hpp"
#include "mkteq/scenario.hpp"

using namespace mkteq;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("mkteq_test_" + name);
    fs::remove_all(dir);
    return dir;
}

ScenarioConfig small_config() {
    ScenarioConfig config = parse_config(config_template());
    config.grid_steps = 64;
    config.run.mc_paths = 2;
    return config;
}

}  // namespace

TEST_CASE("config template parses and round-trips byte-identically") {
    const std::string text = config_template();
    ScenarioConfig config = parse_config(text);
    const std::string once = serialize_config(config);
    const std::string twice = serialize_config(parse_config(once));
    CHECK(once == twice);
    CHECK(once == text);
    CHECK(config.investors.count() == 2);
    CHECK(config.run.regimes.size() == 5);
}

TEST_CASE("config parser fails fast on malformed input") {
    CHECK_THROWS_AS(parse_config("{not json"), ConfigParseError);
    CHECK_THROWS_AS(parse_config("{}"), ConfigParseError);

    ScenarioConfig config = parse_config(config_template());
    std::string text = serialize_config(config);
    // unknown keys anywhere are rejected
    auto j = nlohmann::ordered_json::parse(text);
    j["market"]["typo_key"] = 1;
    CHECK_THROWS_AS(parse_config(j.dump()), ConfigParseError);

    auto j2 = nlohmann::ordered_json::parse(text);
    j2["investors"][0]["exposure"]["kind"] = "mystery";
    CHECK_THROWS_AS(parse_config(j2.dump()), ConfigParseError);
}

TEST_CASE("run_scenario writes the expected files with clean clearing") {
    ScenarioConfig config = small_config();
    fs::path dir = fresh_dir("run");
    RunReport report = run_scenario(config, dir, Exec::serial);

    CHECK(fs::exists(dir / "summary.json"));
    CHECK(fs::exists(dir / "returns_frictionless_competitive.csv"));
    CHECK(fs::exists(dir / "returns_frictional_nash.csv"));
    CHECK(fs::exists(dir / "demand_frictional_nash_inv0.csv"));
    CHECK(fs::exists(dir / "rate_frictional_nash_inv1.csv"));
    CHECK(fs::exists(dir / "premium_price_impact.csv"));
    CHECK(fs::exists(dir / "premium_friction.csv"));

    for (const auto& reg : report.regimes) {
        CHECK(reg.max_clearing_violation <= 1e-8);
        CHECK(reg.max_rate_clearing_violation <= 1e-8);
    }
    REQUIRE(report.premium_identity_gap.has_value());
    CHECK(*report.premium_identity_gap <= 1e-10);
    REQUIRE(report.oracle_linear_solve_gap.has_value());
    CHECK(*report.oracle_linear_solve_gap <= 1e-8);
    CHECK(report.stochastic);
    CHECK(report.mc_paths == 2);

    // the CSV layout is t,asset,value with 17 significant digits
    std::string csv = slurp(dir / "returns_frictionless_competitive.csv");
    CHECK(csv.rfind("t,asset,value\n", 0) == 0);
    CHECK(csv.find("e-") != std::string::npos);

    // summary parses back as JSON
    auto j = nlohmann::ordered_json::parse(slurp(dir / "summary.json"));
    CHECK(j.contains("regimes"));
    CHECK(j.contains("max_regime_return_gap"));
}

TEST_CASE("fixed seeds make repeated runs byte-identical") {
    ScenarioConfig config = small_config();
    fs::path dir_a = fresh_dir("det_a");
    fs::path dir_b = fresh_dir("det_b");
    run_scenario(config, dir_a, Exec::serial);
    run_scenario(config, dir_b, default_exec());
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const fs::path other = dir_b / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(entry.path()) == slurp(other));
        ++compared;
    }
    CHECK(compared > 5);
}

TEST_CASE("changing the seed changes stochastic outputs") {
    ScenarioConfig config = small_config();
    fs::path dir_a = fresh_dir("seed_a");
    fs::path dir_b = fresh_dir("seed_b");
    run_scenario(config, dir_a, Exec::serial);
    config.run.seed += 1;
    run_scenario(config, dir_b, Exec::serial);
    CHECK(slurp(dir_a / "demand_frictionless_nash_inv1.csv") !=
          slurp(dir_b / "demand_frictionless_nash_inv1.csv"));
}

TEST_CASE("invalid market fails before any output is written") {
    ScenarioConfig config = small_config();
    config.market.covariance(0, 0) = -0.04;
    fs::path dir = fresh_dir("invalid");
    CHECK_THROWS_AS(run_scenario(config, dir, Exec::serial), NonSpdCovariance);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("minimal config runs end to end well under the time budget") {
    ScenarioConfig config = parse_config(config_template());
    config.investors.exposure[1] =
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 2.0));
    config.run.mc_paths = 1;  // d = 1, N = 2, constants, K = 400
    fs::path dir = fresh_dir("budget");
    RunReport report = run_scenario(config, dir, default_exec());
    CHECK(report.elapsed_ms < 5000.0);
}

TEST_CASE("no-noise equal-tolerance run reports a tiny regime gap") {
    ScenarioConfig config = parse_config(config_template());
    config.grid_steps = 80;
    config.noise = NoiseSpec::none(1);
    config.investors.exposure[1] =
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 2.0));
    config.run.mc_paths = 1;
    config.run.regimes = {Regime::frictionless_competitive, Regime::frictional_nash};
    fs::path dir = fresh_dir("gap");
    RunReport report = run_scenario(config, dir, Exec::serial);
    REQUIRE(report.max_regime_return_gap.has_value());
    CHECK(*report.max_regime_return_gap <= 1e-10);
}

TEST_CASE("lambda_scale sweep finds a unit log-log slope") {
    ScenarioConfig config = parse_config(config_template());
    config.grid_steps = 64;
    config.investors.exposure[1] =
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 2.0));
    fs::path dir = fresh_dir("sweep_lambda");
    SweepDef def{"lambda_scale", {1.0, 0.1, 0.01}};
    SweepReport report = run_sweep(config, def, dir, Exec::serial);
    REQUIRE(report.loglog_slope.has_value());
    CHECK(*report.loglog_slope == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fs::exists(dir / "sweep_lambda_scale.csv"));
    CHECK(fs::exists(dir / "sweep_summary.json"));
}

TEST_CASE("n_investors sweep matches the 2/(N(N-1)) coefficient") {
    ScenarioConfig config = parse_config(config_template());
    config.grid_steps = 64;
    config.investors.exposure[1] =
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 2.0));
    fs::path dir = fresh_dir("sweep_n");
    SweepDef def{"n_investors", {2, 3, 4, 5, 6, 7, 8}};
    SweepReport report = run_sweep(config, def, dir, Exec::serial);
    REQUIRE(report.coefficient_max_error.has_value());
    CHECK(*report.coefficient_max_error <= 1e-12);
    for (const auto& row : report.rows) {
        REQUIRE(row.friction_coefficient.has_value());
        const int n = static_cast<int>(row.value);
        CHECK(*row.friction_coefficient ==
              doctest::Approx(2.0 / (n * (n - 1.0))).epsilon(1e-10));
    }
}

TEST_CASE("delta1 sweep drives the competitive surplus to zero") {
    ScenarioConfig config = parse_config(config_template());
    config.grid_steps = 64;
    config.investors.exposure[1] =
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 2.0));
    fs::path dir = fresh_dir("sweep_d1");
    SweepDef def{"delta1", {10, 100, 1000, 10000, 100000, 1000000}};
    SweepReport report = run_sweep(config, def, dir, Exec::serial);
    double prev = std::abs(*report.rows[2].competitive_surplus_first);
    for (std::size_t i = 3; i < report.rows.size(); ++i) {
        const double cur = std::abs(*report.rows[i].competitive_surplus_first);
        CHECK(cur < prev);
        prev = cur;
    }
    const auto& last = report.rows.back();
    CHECK(std::abs(*last.nash_surplus_first - *last.nash_surplus_limit) <=
          0.01 * std::abs(*last.nash_surplus_limit));
    CHECK_THROWS_AS(run_sweep(config, SweepDef{"delta1", {-1.0}}, dir, Exec::serial),
                    BadSweepValue);
    CHECK_THROWS_AS(run_sweep(config, SweepDef{"unknown", {1.0}}, dir, Exec::serial),
                    BadSweepValue);
}

TEST_CASE("oracle-check passes on a deterministic config") {
    ScenarioConfig config = parse_config(config_template());
    config.grid_steps = 200;
    config.investors.exposure[1] =
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 2.0));
    config.run.mc_paths = 1;
    OracleCheckReport report = run_oracle_check(config, Exec::serial);
    CHECK(report.all_pass);
    bool saw_qp = false;
    for (const auto& check : report.checks) {
        if (check.name == "frictional_qp_vs_explicit") saw_qp = true;
        CAPTURE(check.name);
        CHECK(check.pass);
    }
    CHECK(saw_qp);
}

#ifdef MKTEQ_CLI
TEST_CASE("command-line interface: exit codes and outputs") {
    const std::string cli = MKTEQ_CLI;
    fs::path work = fresh_dir("cli");
    fs::create_directories(work);

    auto shell = [&](const std::string& cmd) {
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };

    CHECK(shell(cli + " print-config-template > " + (work / "config.json").string()) == 0);

    const std::string quiet = " > /dev/null 2>&1";
    CHECK(shell(cli + " run --config " + (work / "config.json").string() + " --out " +
                (work / "out").string() + " --grid-steps 48 --mc-paths 1" + quiet) == 0);
    CHECK(fs::exists(work / "out" / "summary.json"));

    // malformed JSON -> config error (2); bad covariance -> validation (3)
    std::ofstream(work / "broken.json") << "{";
    CHECK(shell(cli + " run --config " + (work / "broken.json").string() + " --out " +
                (work / "o2").string() + quiet) == 2);

    auto j = nlohmann::ordered_json::parse(slurp(work / "config.json"));
    j["market"]["covariance"][0][0] = -1.0;
    std::ofstream(work / "badcov.json") << j.dump();
    CHECK(shell(cli + " run --config " + (work / "badcov.json").string() + " --out " +
                (work / "o3").string() + quiet) == 3);
    CHECK_FALSE(fs::exists(work / "o3"));

    CHECK(shell(cli + " oracle-check --config " + (work / "config.json").string() +
                " --grid-steps 64 --serial" + quiet) == 0);

    // environment defaults stand in for absent flags
    CHECK(shell("MKTEQ_GRID_STEPS=32 " + cli + " run --config " +
                (work / "config.json").string() + " --out " + (work / "env_out").string() +
                " --mc-paths 1" + quiet) == 0);
    std::string csv = slurp(work / "env_out" / "returns_frictionless_competitive.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 34);  // header + 33 nodes
}
#endif
