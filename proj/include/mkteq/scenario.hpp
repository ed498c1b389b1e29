#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mkteq/market.hpp"
#include "mkteq/parallel.hpp"

namespace mkteq {

struct SweepDef {
    std::string parameter;  // lambda_scale | n_investors | delta1
    std::vector<double> values;
};

struct RunConfig {
    std::vector<Regime> regimes;
    std::uint64_t seed = 0;
    int mc_paths = 1;
    int strategic_investor = 0;
    // External benchmark for the frictional premium coefficient (from the
    // competitive transaction-cost literature); reported as a ratio when set,
    // never asserted.
    std::optional<double> competitive_friction_coefficient;
    std::optional<SweepDef> sweep;
};

struct ScenarioConfig {
    Market market;
    int grid_steps = 100;
    Investors investors;
    NoiseSpec noise = NoiseSpec::none(1);
    RunConfig run;
};

// Strict JSON config. parse(serialize(parse(text))) == parse(text) and the
// canonical serialization is byte-stable.
ScenarioConfig parse_config(const std::string& text);
std::string serialize_config(const ScenarioConfig& config);
ScenarioConfig load_config(const std::filesystem::path& path);
std::string config_template();

struct SurplusEntry {
    double mean = 0.0;
    double std_error = 0.0;
};

struct RegimeReport {
    Regime regime;
    double max_clearing_violation = 0.0;
    double max_rate_clearing_violation = 0.0;
    std::vector<SurplusEntry> surplus;  // frictionless regimes only
};

struct RunReport {
    std::vector<RegimeReport> regimes;
    bool stochastic = false;
    int mc_paths = 1;

    std::optional<double> price_impact_premium_max;
    std::optional<double> premium_identity_gap;
    std::optional<double> friction_premium_max;
    std::optional<double> friction_coefficient;        // 2/(N(N-1))
    std::optional<double> friction_coefficient_ratio;  // vs config-supplied benchmark

    std::optional<double> oracle_fixed_point_gap;
    std::optional<int> oracle_fixed_point_iterations;
    std::optional<double> oracle_linear_solve_gap;

    std::optional<double> max_regime_return_gap;

    double elapsed_ms = 0.0;  // reported on stderr, never serialized
};

std::string summary_json(const RunReport& report);

// Computes the requested regimes, writes one CSV per path quantity plus
// summary.json under out_dir. The directory is only touched after the config
// validates.
RunReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                       Exec exec = default_exec());

struct SweepRow {
    double value = 0.0;
    std::optional<double> price_impact_premium_max;
    std::optional<double> friction_premium_max;
    std::optional<double> friction_coefficient;
    std::optional<double> expected_coefficient;
    std::optional<double> competitive_surplus_first;
    std::optional<double> nash_surplus_first;
    std::optional<double> nash_surplus_limit;
    std::optional<double> oracle_gap;
};

struct SweepReport {
    std::string parameter;
    std::vector<SweepRow> rows;
    std::optional<double> loglog_slope;           // lambda_scale: premium vs scale
    std::optional<double> coefficient_max_error;  // n_investors: vs 2/(N(N-1))
    std::optional<double> surplus_decay_slope;    // delta1: log|surplus| vs log delta_1
};

SweepReport run_sweep(const ScenarioConfig& config, const SweepDef& sweep,
                      const std::filesystem::path& out_dir, Exec exec = default_exec());

struct OracleCheck {
    std::string name;
    double gap = 0.0;
    double tol = 0.0;
    bool pass = false;
};

struct OracleCheckReport {
    std::vector<OracleCheck> checks;
    bool all_pass = false;
};

// Cross-checks the closed forms of the configured scenario against the
// brute-force routes (fixed point, per-node solve, pointwise best response,
// QP when applicable) and the clearing conditions.
OracleCheckReport run_oracle_check(const ScenarioConfig& config, Exec exec = default_exec());
std::string oracle_report_json(const OracleCheckReport& report);

}  // namespace mkteq
