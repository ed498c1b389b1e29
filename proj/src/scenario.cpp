#include "mkteq/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "mkteq/frictional.hpp"
#include "mkteq/frictionless.hpp"
#include "mkteq/oracle.hpp"

namespace mkteq {

namespace {

using ordered_json = nlohmann::ordered_json;

void reject_unknown_keys(const ordered_json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* k : known) {
            if (item.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigParseError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

Eigen::MatrixXd parse_matrix(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        throw ConfigParseError(where + " must be a non-empty array of rows");
    }
    const auto rows = j.size();
    const auto cols = j.at(0).size();
    Eigen::MatrixXd out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        if (j.at(r).size() != cols) {
            throw ConfigParseError(where + " has ragged rows");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            out(r, c) = j.at(r).at(c).get<double>();
        }
    }
    return out;
}

Eigen::VectorXd parse_vector(const ordered_json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) {
        throw ConfigParseError(where + " must be a non-empty array");
    }
    Eigen::VectorXd out(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        out(i) = j.at(i).get<double>();
    }
    return out;
}

ordered_json dump_matrix(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

ordered_json dump_vector(const Eigen::VectorXd& v) {
    ordered_json out = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

ProcessSpec parse_exposure(const ordered_json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind")) {
        throw ConfigParseError(where + " must be an object with a 'kind'");
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        reject_unknown_keys(j, {"kind", "value"}, where);
        return ProcessSpec::constant(parse_vector(j.at("value"), where + ".value"));
    }
    if (kind == "deterministic_poly") {
        reject_unknown_keys(j, {"kind", "coefficients"}, where);
        return ProcessSpec::deterministic(
            parse_matrix(j.at("coefficients"), where + ".coefficients"));
    }
    if (kind == "martingale") {
        reject_unknown_keys(j, {"kind", "initial", "scale"}, where);
        return ProcessSpec::martingale(parse_vector(j.at("initial"), where + ".initial"),
                                       parse_matrix(j.at("scale"), where + ".scale"));
    }
    if (kind == "ou") {
        reject_unknown_keys(j, {"kind", "initial", "mean", "reversion", "scale"}, where);
        return ProcessSpec::ou(parse_vector(j.at("initial"), where + ".initial"),
                               parse_vector(j.at("mean"), where + ".mean"),
                               j.at("reversion").get<double>(),
                               parse_matrix(j.at("scale"), where + ".scale"));
    }
    if (kind == "sum") {
        reject_unknown_keys(j, {"kind", "terms"}, where);
        std::vector<ProcessSpec> terms;
        for (const auto& term : j.at("terms")) {
            terms.push_back(parse_exposure(term, where + ".terms"));
        }
        return ProcessSpec::sum(std::move(terms));
    }
    throw ConfigParseError(where + ": unknown process kind '" + kind + "'");
}

ordered_json dump_exposure(const ProcessSpec& spec) {
    ordered_json out;
    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantSpec>) {
                out["kind"] = "constant";
                out["value"] = dump_vector(s.value);
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                out["kind"] = "deterministic_poly";
                out["coefficients"] = dump_matrix(s.coeff);
            } else if constexpr (std::is_same_v<T, MartingaleSpec>) {
                out["kind"] = "martingale";
                out["initial"] = dump_vector(s.initial);
                out["scale"] = dump_matrix(s.scale);
            } else if constexpr (std::is_same_v<T, OuSpec>) {
                out["kind"] = "ou";
                out["initial"] = dump_vector(s.initial);
                out["mean"] = dump_vector(s.mean);
                out["reversion"] = s.reversion;
                out["scale"] = dump_matrix(s.scale);
            } else {
                out["kind"] = "sum";
                ordered_json terms = ordered_json::array();
                for (const auto& term : s.terms) {
                    terms.push_back(dump_exposure(term));
                }
                out["terms"] = terms;
            }
        },
        spec.kind);
    return out;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.16e", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoFailure("cannot open " + path.string() + " for writing");
    }
    out << content;
    if (!out) {
        throw IoFailure("write failed for " + path.string());
    }
}

std::string path_csv(const PathGrid& path) {
    std::string out = "t,asset,value\n";
    for (int k = 0; k < path.grid.nodes(); ++k) {
        for (int i = 0; i < path.dim(); ++i) {
            out += format_value(path.grid.t(k));
            out += ',';
            out += std::to_string(i);
            out += ',';
            out += format_value(path.values(k, i));
            out += '\n';
        }
    }
    return out;
}

EquilibriumResult compute_regime(Regime regime, const ScenarioConfig& config,
                                 const Realization& real, Exec exec) {
    switch (regime) {
        case Regime::frictionless_competitive:
            return frictionless::competitive_equilibrium(config.market, config.investors, real);
        case Regime::frictionless_nash:
            return frictionless::nash_equilibrium(config.market, config.investors, real);
        case Regime::frictional_best_response:
            return frictional::best_response_equilibrium(config.market, config.investors, real,
                                                         config.run.strategic_investor, exec);
        case Regime::frictional_nash:
            return frictional::nash_equilibrium(config.market, config.investors, real, exec);
        case Regime::frictional_nash_two_investor:
            return frictional::nash_equilibrium_two_investors(config.market, config.investors,
                                                              real, exec);
    }
    throw BadIndex("unknown regime");
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigParseError(std::string("invalid JSON: ") + e.what());
    }
    try {
        reject_unknown_keys(j, {"market", "investors", "noise", "run"}, "config");
        ScenarioConfig config;

        const auto& jm = j.at("market");
        reject_unknown_keys(jm,
                            {"num_assets", "covariance", "cost_diagonal", "discount_rate",
                             "horizon", "grid_steps"},
                            "market");
        config.market.num_assets = jm.at("num_assets").get<int>();
        config.market.covariance = parse_matrix(jm.at("covariance"), "market.covariance");
        Eigen::VectorXd cost_diag = parse_vector(jm.at("cost_diagonal"), "market.cost_diagonal");
        config.market.cost = Eigen::MatrixXd(cost_diag.asDiagonal());
        config.market.discount_rate = jm.at("discount_rate").get<double>();
        config.market.horizon = jm.at("horizon").get<double>();
        config.grid_steps = jm.at("grid_steps").get<int>();

        const auto& ji = j.at("investors");
        if (!ji.is_array() || ji.size() < 2) {
            throw ConfigParseError("investors must list at least two entries");
        }
        config.investors.tolerance.resize(ji.size());
        for (std::size_t m = 0; m < ji.size(); ++m) {
            const auto& inv = ji.at(m);
            reject_unknown_keys(inv, {"tolerance", "exposure"}, "investors[]");
            config.investors.tolerance(m) = inv.at("tolerance").get<double>();
            config.investors.exposure.push_back(
                parse_exposure(inv.at("exposure"), "investors[].exposure"));
        }

        const auto& jn = j.at("noise");
        reject_unknown_keys(jn, {"form", "coefficients"}, "noise");
        const std::string form = jn.at("form").get<std::string>();
        if (form == "none") {
            config.noise = NoiseSpec::none(config.market.num_assets);
        } else if (form == "poly") {
            config.noise = NoiseSpec::poly(parse_matrix(jn.at("coefficients"), "noise"),
                                           config.market.horizon);
        } else if (form == "harmonics") {
            config.noise = NoiseSpec::harmonics(parse_matrix(jn.at("coefficients"), "noise"),
                                                config.market.horizon);
        } else {
            throw ConfigParseError("unknown noise form '" + form + "'");
        }

        const auto& jr = j.at("run");
        reject_unknown_keys(jr,
                            {"regimes", "seed", "mc_paths", "strategic_investor",
                             "competitive_friction_coefficient", "sweep"},
                            "run");
        for (const auto& name : jr.at("regimes")) {
            config.run.regimes.push_back(regime_from_name(name.get<std::string>()));
        }
        config.run.seed = jr.at("seed").get<std::uint64_t>();
        config.run.mc_paths = jr.at("mc_paths").get<int>();
        config.run.strategic_investor = jr.at("strategic_investor").get<int>();
        if (jr.contains("competitive_friction_coefficient") &&
            !jr.at("competitive_friction_coefficient").is_null()) {
            config.run.competitive_friction_coefficient =
                jr.at("competitive_friction_coefficient").get<double>();
        }
        if (jr.contains("sweep") && !jr.at("sweep").is_null()) {
            const auto& js = jr.at("sweep");
            reject_unknown_keys(js, {"parameter", "values"}, "run.sweep");
            SweepDef sweep;
            sweep.parameter = js.at("parameter").get<std::string>();
            for (const auto& v : js.at("values")) {
                sweep.values.push_back(v.get<double>());
            }
            config.run.sweep = std::move(sweep);
        }
        return config;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigParseError(std::string("bad config structure: ") + e.what());
    }
}

std::string serialize_config(const ScenarioConfig& config) {
    ordered_json j;
    j["market"]["num_assets"] = config.market.num_assets;
    j["market"]["covariance"] = dump_matrix(config.market.covariance);
    j["market"]["cost_diagonal"] = dump_vector(config.market.cost.diagonal());
    j["market"]["discount_rate"] = config.market.discount_rate;
    j["market"]["horizon"] = config.market.horizon;
    j["market"]["grid_steps"] = config.grid_steps;

    j["investors"] = ordered_json::array();
    for (int m = 0; m < config.investors.count(); ++m) {
        ordered_json inv;
        inv["tolerance"] = config.investors.tolerance(m);
        inv["exposure"] = dump_exposure(config.investors.exposure[m]);
        j["investors"].push_back(inv);
    }

    switch (config.noise.form()) {
        case NoiseSpec::Form::none:
            j["noise"]["form"] = "none";
            break;
        case NoiseSpec::Form::poly:
            j["noise"]["form"] = "poly";
            j["noise"]["coefficients"] = dump_matrix(config.noise.coefficients());
            break;
        case NoiseSpec::Form::harmonics:
            j["noise"]["form"] = "harmonics";
            j["noise"]["coefficients"] = dump_matrix(config.noise.coefficients());
            break;
    }

    j["run"]["regimes"] = ordered_json::array();
    for (Regime r : config.run.regimes) {
        j["run"]["regimes"].push_back(regime_name(r));
    }
    j["run"]["seed"] = config.run.seed;
    j["run"]["mc_paths"] = config.run.mc_paths;
    j["run"]["strategic_investor"] = config.run.strategic_investor;
    if (config.run.competitive_friction_coefficient) {
        j["run"]["competitive_friction_coefficient"] =
            *config.run.competitive_friction_coefficient;
    } else {
        j["run"]["competitive_friction_coefficient"] = nullptr;
    }
    if (config.run.sweep) {
        j["run"]["sweep"]["parameter"] = config.run.sweep->parameter;
        j["run"]["sweep"]["values"] = config.run.sweep->values;
    } else {
        j["run"]["sweep"] = nullptr;
    }
    return j.dump(2) + "\n";
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot read config " + path.string());
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_template() {
    ScenarioConfig config;
    config.market.num_assets = 1;
    config.market.covariance = Eigen::MatrixXd::Constant(1, 1, 0.04);
    config.market.cost = Eigen::MatrixXd::Constant(1, 1, 0.1);
    config.market.discount_rate = 0.0;
    config.market.horizon = 1.0;
    config.grid_steps = 400;
    config.investors.tolerance = Eigen::VectorXd::Ones(2);
    config.investors.exposure.push_back(
        ProcessSpec::constant(Eigen::VectorXd::Constant(1, 1.0)));
    config.investors.exposure.push_back(ProcessSpec::ou(
        Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 1.0), 2.0,
        Eigen::MatrixXd::Constant(1, 1, 0.3)));
    config.noise = NoiseSpec::poly(Eigen::MatrixXd::Constant(1, 1, 0.5), config.market.horizon);
    config.run.regimes = {Regime::frictionless_competitive, Regime::frictionless_nash,
                          Regime::frictional_best_response, Regime::frictional_nash,
                          Regime::frictional_nash_two_investor};
    config.run.seed = 42;
    config.run.mc_paths = 4;
    config.run.strategic_investor = 0;
    config.run.sweep = SweepDef{"lambda_scale", {1.0, 0.1, 0.01}};
    return serialize_config(config);
}

namespace {

ordered_json optional_number(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

}  // namespace

std::string summary_json(const RunReport& report) {
    ordered_json j;
    j["regimes"] = ordered_json::object();
    for (const auto& reg : report.regimes) {
        ordered_json r;
        r["max_clearing_violation"] = reg.max_clearing_violation;
        r["max_rate_clearing_violation"] = reg.max_rate_clearing_violation;
        if (!reg.surplus.empty()) {
            ordered_json s = ordered_json::array();
            for (const auto& entry : reg.surplus) {
                s.push_back({{"mean", entry.mean}, {"std_error", entry.std_error}});
            }
            r["surplus"] = s;
        }
        j["regimes"][regime_name(reg.regime)] = r;
    }
    j["stochastic"] = report.stochastic;
    j["mc_paths"] = report.mc_paths;
    j["premiums"]["price_impact_max"] = optional_number(report.price_impact_premium_max);
    j["premiums"]["identity_gap"] = optional_number(report.premium_identity_gap);
    j["premiums"]["friction_max"] = optional_number(report.friction_premium_max);
    j["premiums"]["friction_coefficient"] = optional_number(report.friction_coefficient);
    j["premiums"]["friction_coefficient_ratio"] =
        optional_number(report.friction_coefficient_ratio);
    j["oracle"]["fixed_point_gap"] = optional_number(report.oracle_fixed_point_gap);
    if (report.oracle_fixed_point_iterations) {
        j["oracle"]["fixed_point_iterations"] = *report.oracle_fixed_point_iterations;
    } else {
        j["oracle"]["fixed_point_iterations"] = nullptr;
    }
    j["oracle"]["linear_solve_gap"] = optional_number(report.oracle_linear_solve_gap);
    j["max_regime_return_gap"] = optional_number(report.max_regime_return_gap);
    return j.dump(2) + "\n";
}

RunReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir,
                       Exec exec) {
    const auto start = std::chrono::steady_clock::now();

    bool frictional = false;
    for (Regime r : config.run.regimes) {
        frictional = frictional || regime_is_frictional(r);
    }
    validate_market(config.market, config.investors, config.noise, frictional);
    if (config.run.strategic_investor < 0 ||
        config.run.strategic_investor >= config.investors.count()) {
        throw BadIndex("strategic_investor out of range");
    }

    const TimeGrid grid(config.grid_steps, config.market.horizon);
    bool stochastic = false;
    for (const auto& spec : config.investors.exposure) {
        stochastic = stochastic || spec.stochastic();
    }
    const int paths = stochastic ? std::max(1, config.run.mc_paths) : 1;
    const Exec inner = paths > 1 ? Exec::serial : exec;

    std::vector<Realization> real(paths);
    par_for(paths, exec, [&](std::int64_t p) {
        real[p] = realize_scenario(config.investors, config.noise, grid,
                                   config.run.seed + static_cast<std::uint64_t>(p));
    });

    RunReport report;
    report.stochastic = stochastic;
    report.mc_paths = paths;

    // Compute everything first; files are written only after all regimes
    // succeeded, so failures leave no partial output.
    std::vector<std::vector<EquilibriumResult>> results(config.run.regimes.size());
    for (std::size_t ri = 0; ri < config.run.regimes.size(); ++ri) {
        results[ri].resize(paths);
        const Regime regime = config.run.regimes[ri];
        // Path 0 runs serially so structural errors surface as exceptions
        // before the parallel region starts.
        results[ri][0] = compute_regime(regime, config, real[0], inner);
        par_for(paths - 1, exec, [&](std::int64_t p) {
            results[ri][p + 1] = compute_regime(regime, config, real[p + 1], inner);
        });

        RegimeReport reg;
        reg.regime = regime;
        for (int p = 0; p < paths; ++p) {
            auto clearing = oracle::verify_clearing(results[ri][p], real[p], 1e-8);
            reg.max_clearing_violation =
                std::max(reg.max_clearing_violation, clearing.max_demand_violation);
            reg.max_rate_clearing_violation =
                std::max(reg.max_rate_clearing_violation, clearing.max_rate_violation);
        }
        if (!regime_is_frictional(regime)) {
            const int N = config.investors.count();
            reg.surplus.resize(N);
            for (int m = 0; m < N; ++m) {
                std::vector<double> vals(paths);
                for (int p = 0; p < paths; ++p) {
                    vals[p] = frictionless::utility_surplus(config.market, config.investors,
                                                            real[p], m, results[ri][p].returns,
                                                            results[ri][p].demands[m]);
                }
                double mean = 0.0;
                for (double v : vals) mean += v;
                mean /= paths;
                double var = 0.0;
                for (double v : vals) var += (v - mean) * (v - mean);
                reg.surplus[m].mean = mean;
                reg.surplus[m].std_error =
                    paths > 1 ? std::sqrt(var / (paths - 1.0) / paths) : 0.0;
            }
        }
        report.regimes.push_back(std::move(reg));
    }

    std::optional<frictionless::LiquidityPremium> premium;
    std::optional<PathGrid> friction_premium;
    for (Regime r : config.run.regimes) {
        if (r == Regime::frictionless_nash && !premium) {
            premium = frictionless::liquidity_premium(config.market, config.investors, real[0]);
            report.price_impact_premium_max = premium->premium.max_abs();
            report.premium_identity_gap = premium->identity_gap;
        }
        if ((r == Regime::frictional_nash || r == Regime::frictional_nash_two_investor) &&
            !friction_premium) {
            const int N = config.investors.count();
            friction_premium =
                frictional::nash_friction_premium(config.market, N, real[0]);
            report.friction_premium_max = friction_premium->max_abs();
            report.friction_coefficient = 2.0 / (N * (N - 1.0));
            if (config.run.competitive_friction_coefficient) {
                report.friction_coefficient_ratio =
                    *report.friction_coefficient / *config.run.competitive_friction_coefficient;
            }
        }
        if (r == Regime::frictionless_nash && !report.oracle_linear_solve_gap) {
            PathGrid closed = frictionless::nash_returns(config.market, config.investors, real[0]);
            report.oracle_linear_solve_gap =
                max_abs_diff(oracle::nash_pointwise(config.market, config.investors, real[0]),
                             closed);
            try {
                auto fp = oracle::nash_fixed_point(config.market, config.investors, real[0], 2000,
                                                   1e-9);
                report.oracle_fixed_point_gap = max_abs_diff(fp.nu, closed);
                report.oracle_fixed_point_iterations = fp.iterations;
            } catch (const NoConvergence&) {
                // left unset; the linear-solve gap still cross-checks the formula
            }
        }
    }

    for (std::size_t a = 0; a < results.size(); ++a) {
        for (std::size_t b = a + 1; b < results.size(); ++b) {
            const double gap = max_abs_diff(results[a][0].returns, results[b][0].returns);
            report.max_regime_return_gap =
                std::max(report.max_regime_return_gap.value_or(0.0), gap);
        }
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoFailure("cannot create output directory " + out_dir.string());
    }
    for (std::size_t ri = 0; ri < config.run.regimes.size(); ++ri) {
        const std::string name = regime_name(config.run.regimes[ri]);
        const EquilibriumResult& res = results[ri][0];
        write_file(out_dir / ("returns_" + name + ".csv"), path_csv(res.returns));
        for (std::size_t m = 0; m < res.demands.size(); ++m) {
            write_file(out_dir / ("demand_" + name + "_inv" + std::to_string(m) + ".csv"),
                       path_csv(res.demands[m]));
        }
        for (std::size_t m = 0; m < res.rates.size(); ++m) {
            write_file(out_dir / ("rate_" + name + "_inv" + std::to_string(m) + ".csv"),
                       path_csv(res.rates[m]));
        }
    }
    if (premium) {
        write_file(out_dir / "premium_price_impact.csv", path_csv(premium->premium));
    }
    if (friction_premium) {
        write_file(out_dir / "premium_friction.csv", path_csv(*friction_premium));
    }
    write_file(out_dir / "summary.json", summary_json(report));

    report.elapsed_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    return report;
}

namespace {

std::string optional_cell(const std::optional<double>& v) {
    return v ? format_value(*v) : std::string();
}

}  // namespace

SweepReport run_sweep(const ScenarioConfig& config, const SweepDef& sweep,
                      const std::filesystem::path& out_dir, Exec exec) {
    if (sweep.values.empty()) {
        throw BadSweepValue("sweep needs at least one value");
    }
    validate_market(config.market, config.investors, config.noise, true);

    SweepReport report;
    report.parameter = sweep.parameter;
    report.rows.resize(sweep.values.size());

    const TimeGrid grid(config.grid_steps, config.market.horizon);

    if (sweep.parameter == "lambda_scale") {
        for (double eps : sweep.values) {
            if (!(eps > 0.0)) {
                throw BadSweepValue("lambda_scale values must be positive");
            }
        }
        par_for(static_cast<std::int64_t>(sweep.values.size()), exec, [&](std::int64_t i) {
            const double eps = sweep.values[i];
            ScenarioConfig scaled = config;
            scaled.market.cost = eps * config.market.cost;
            Realization real =
                realize_scenario(scaled.investors, scaled.noise, grid, scaled.run.seed);
            SweepRow row;
            row.value = eps;
            row.friction_premium_max =
                frictional::nash_friction_premium(scaled.market, scaled.investors.count(), real)
                    .max_abs();
            auto premium =
                frictionless::liquidity_premium(scaled.market, scaled.investors, real);
            row.price_impact_premium_max = premium.premium.max_abs();
            row.oracle_gap = max_abs_diff(
                oracle::nash_pointwise(scaled.market, scaled.investors, real),
                frictionless::nash_returns(scaled.market, scaled.investors, real));
            report.rows[i] = row;
        });
        std::vector<double> lx, ly;
        for (const auto& row : report.rows) {
            if (row.friction_premium_max && *row.friction_premium_max > 0.0) {
                lx.push_back(std::log(row.value));
                ly.push_back(std::log(*row.friction_premium_max));
            }
        }
        if (lx.size() >= 2) {
            report.loglog_slope = fit_slope(lx, ly);
        }
    } else if (sweep.parameter == "n_investors") {
        if (!equal_tolerances(config.investors)) {
            throw BadSweepValue("n_investors sweep needs the equal-tolerance template");
        }
        const double delta_bar = config.investors.tolerance(0);
        for (double raw : sweep.values) {
            if (raw < 2 || raw != static_cast<int>(raw)) {
                throw BadSweepValue("n_investors values must be integers >= 2");
            }
        }
        par_for(static_cast<std::int64_t>(sweep.values.size()), exec, [&](std::int64_t i) {
            const double raw = sweep.values[i];
            const int n = static_cast<int>(raw);
            Investors inv;
            inv.tolerance = Eigen::VectorXd::Constant(n, delta_bar);
            for (int m = 0; m < n; ++m) {
                inv.exposure.push_back(
                    config.investors.exposure[m % config.investors.exposure.size()]);
            }
            Realization real = realize_scenario(inv, config.noise, grid, config.run.seed);
            SweepRow row;
            row.value = raw;
            PathGrid fric = frictional::nash_friction_premium(config.market, n, real);
            row.friction_premium_max = fric.max_abs();
            row.expected_coefficient = 2.0 / (n * (n - 1.0));
            // Least-squares coefficient of the premium against Lambda (a - r psi_dot).
            PathGrid q = apply_matrix(
                config.market.cost,
                PathGrid(grid, real.psi_drift.values -
                                   config.market.discount_rate * real.psi_dot.values));
            const double qq = q.values.cwiseProduct(q.values).sum();
            if (qq > 0.0) {
                row.friction_coefficient = fric.values.cwiseProduct(q.values).sum() / qq;
            }
            auto premium = frictionless::liquidity_premium(config.market, inv, real);
            row.price_impact_premium_max = premium.premium.max_abs();
            row.oracle_gap =
                max_abs_diff(oracle::nash_pointwise(config.market, inv, real),
                             frictionless::nash_returns(config.market, inv, real));
            report.rows[i] = row;
        });
        double max_err = 0.0;
        bool have = false;
        for (const auto& row : report.rows) {
            if (row.friction_coefficient && row.expected_coefficient) {
                max_err = std::max(max_err,
                                   std::abs(*row.friction_coefficient -
                                            *row.expected_coefficient));
                have = true;
            }
        }
        if (have) report.coefficient_max_error = max_err;
    } else if (sweep.parameter == "delta1") {
        for (double d1 : sweep.values) {
            if (!(d1 > 0.0)) {
                throw BadSweepValue("delta1 values must be positive");
            }
        }
        par_for(static_cast<std::int64_t>(sweep.values.size()), exec, [&](std::int64_t i) {
            const double d1 = sweep.values[i];
            Investors inv = config.investors;
            inv.tolerance(0) = d1;
            Realization real = realize_scenario(inv, config.noise, grid, config.run.seed);
            SweepRow row;
            row.value = d1;
            PathGrid comp_nu = frictionless::competitive_returns(config.market, inv, real);
            auto comp_demands =
                frictionless::competitive_demands(config.market, inv, real, comp_nu);
            row.competitive_surplus_first = frictionless::utility_surplus(
                config.market, inv, real, 0, comp_nu, comp_demands[0]);
            PathGrid nash_nu = frictionless::nash_returns(config.market, inv, real);
            auto nash_demands =
                frictionless::nash_demands(config.market, inv, real, nash_nu);
            row.nash_surplus_first = frictionless::utility_surplus(config.market, inv, real, 0,
                                                                   nash_nu, nash_demands[0]);
            row.nash_surplus_limit =
                frictionless::nash_surplus_limit(config.market, inv, real, 0);
            row.oracle_gap = max_abs_diff(
                oracle::nash_pointwise(config.market, inv, real), nash_nu);
            report.rows[i] = row;
        });
        std::vector<double> lx, ly;
        for (const auto& row : report.rows) {
            if (row.competitive_surplus_first && *row.competitive_surplus_first != 0.0) {
                lx.push_back(std::log(row.value));
                ly.push_back(std::log(std::abs(*row.competitive_surplus_first)));
            }
        }
        if (lx.size() >= 2) {
            report.surplus_decay_slope = fit_slope(lx, ly);
        }
    } else {
        throw BadSweepValue("unknown sweep parameter '" + sweep.parameter + "'");
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw IoFailure("cannot create output directory " + out_dir.string());
    }
    std::string csv =
        "value,price_impact_premium_max,friction_premium_max,friction_coefficient,"
        "expected_coefficient,competitive_surplus_1,nash_surplus_1,nash_surplus_limit,"
        "oracle_gap\n";
    for (const auto& row : report.rows) {
        csv += format_value(row.value);
        csv += ',' + optional_cell(row.price_impact_premium_max);
        csv += ',' + optional_cell(row.friction_premium_max);
        csv += ',' + optional_cell(row.friction_coefficient);
        csv += ',' + optional_cell(row.expected_coefficient);
        csv += ',' + optional_cell(row.competitive_surplus_first);
        csv += ',' + optional_cell(row.nash_surplus_first);
        csv += ',' + optional_cell(row.nash_surplus_limit);
        csv += ',' + optional_cell(row.oracle_gap);
        csv += '\n';
    }
    write_file(out_dir / ("sweep_" + sweep.parameter + ".csv"), csv);

    ordered_json j;
    j["parameter"] = report.parameter;
    j["loglog_slope"] = optional_number(report.loglog_slope);
    j["coefficient_max_error"] = optional_number(report.coefficient_max_error);
    j["surplus_decay_slope"] = optional_number(report.surplus_decay_slope);
    write_file(out_dir / "sweep_summary.json", j.dump(2) + "\n");
    return report;
}

OracleCheckReport run_oracle_check(const ScenarioConfig& config, Exec exec) {
    bool frictional = false;
    for (Regime r : config.run.regimes) {
        frictional = frictional || regime_is_frictional(r);
    }
    validate_market(config.market, config.investors, config.noise, frictional);

    const TimeGrid grid(config.grid_steps, config.market.horizon);
    Realization real = realize_scenario(config.investors, config.noise, grid, config.run.seed);

    OracleCheckReport report;
    auto add = [&](const std::string& name, double gap, double tol) {
        report.checks.push_back({name, gap, tol, gap <= tol});
    };

    PathGrid nash_nu = frictionless::nash_returns(config.market, config.investors, real);
    try {
        auto fp = oracle::nash_fixed_point(config.market, config.investors, real, 2000, 1e-9);
        add("nash_fixed_point_vs_closed_form", max_abs_diff(fp.nu, nash_nu), 1e-8);
    } catch (const NoConvergence& e) {
        report.checks.push_back(
            {std::string("nash_fixed_point_vs_closed_form: ") + e.what(),
             std::numeric_limits<double>::quiet_NaN(), 1e-8, false});
    }
    add("nash_pointwise_vs_closed_form",
        max_abs_diff(oracle::nash_pointwise(config.market, config.investors, real), nash_nu),
        1e-8);

    const int n = config.run.strategic_investor;
    add("best_response_pointwise_vs_closed_form",
        max_abs_diff(oracle::best_response_pointwise(config.market, config.investors, real, n),
                     frictionless::best_response_demand(config.market, config.investors, real, n)),
        1e-10);

    add("liquidity_premium_identity",
        frictionless::liquidity_premium(config.market, config.investors, real).identity_gap,
        1e-10);

    if (!real.stochastic() && equal_tolerances(config.investors)) {
        auto qp = oracle::frictional_qp(config.market, config.investors, real, n);
        auto explicit_solution =
            frictional::best_response(config.market, config.investors, real, n, exec);
        const double scale = std::max(explicit_solution.phi.max_abs(), 1e-12);
        add("frictional_qp_vs_explicit",
            max_abs_diff(qp.phi, explicit_solution.phi) / scale, 0.02);
    }

    for (Regime regime : config.run.regimes) {
        EquilibriumResult res = compute_regime(regime, config, real, exec);
        auto clearing = oracle::verify_clearing(res, real, 1e-8);
        add("clearing_" + regime_name(regime),
            std::max(clearing.max_demand_violation, clearing.max_rate_violation), 1e-8);
    }

    report.all_pass = true;
    for (const auto& check : report.checks) {
        report.all_pass = report.all_pass && check.pass;
    }
    return report;
}

std::string oracle_report_json(const OracleCheckReport& report) {
    ordered_json j;
    j["checks"] = ordered_json::array();
    for (const auto& check : report.checks) {
        j["checks"].push_back({{"name", check.name},
                               {"gap", check.gap},
                               {"tol", check.tol},
                               {"pass", check.pass}});
    }
    j["all_pass"] = report.all_pass;
    return j.dump(2) + "\n";
}

}  // namespace mkteq
