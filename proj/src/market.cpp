#include "mkteq/market.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mkteq {

Aggregates aggregate(const Investors& investors) {
    const int n = investors.count();
    if (n < 2) {
        throw WrongInvestorCount("need at least two investors");
    }
    if (static_cast<int>(investors.exposure.size()) != n) {
        throw BadDimension("tolerances and exposures disagree on investor count");
    }
    if ((investors.tolerance.array() <= 0.0).any()) {
        throw BadDimension("risk tolerances must be positive");
    }
    Aggregates out;
    out.delta = investors.tolerance.sum();
    out.lambda = investors.tolerance / out.delta;
    out.zeta = ProcessSpec::sum(investors.exposure);
    return out;
}

double one_minus_sum_lambda_sq(const Eigen::VectorXd& lambda) {
    double acc = 0.0;
    for (int m = 0; m < lambda.size(); ++m) {
        acc += lambda(m) * (1.0 - lambda(m));
    }
    return acc;
}

bool equal_tolerances(const Investors& investors, double rel_tol) {
    const double first = investors.tolerance(0);
    for (int m = 1; m < investors.count(); ++m) {
        if (std::abs(investors.tolerance(m) - first) > rel_tol * std::abs(first)) {
            return false;
        }
    }
    return true;
}

std::string regime_name(Regime r) {
    switch (r) {
        case Regime::frictionless_competitive: return "frictionless_competitive";
        case Regime::frictionless_nash: return "frictionless_nash";
        case Regime::frictional_best_response: return "frictional_best_response";
        case Regime::frictional_nash: return "frictional_nash";
        case Regime::frictional_nash_two_investor: return "frictional_nash_two_investor";
    }
    throw BadIndex("unknown regime");
}

Regime regime_from_name(const std::string& name) {
    for (Regime r : {Regime::frictionless_competitive, Regime::frictionless_nash,
                     Regime::frictional_best_response, Regime::frictional_nash,
                     Regime::frictional_nash_two_investor}) {
        if (regime_name(r) == name) return r;
    }
    throw ConfigParseError("unknown regime name: " + name);
}

bool regime_is_frictional(Regime r) {
    return r == Regime::frictional_best_response || r == Regime::frictional_nash ||
           r == Regime::frictional_nash_two_investor;
}

bool Realization::stochastic() const {
    for (const auto& z : zeta) {
        if (z.spec.stochastic()) return true;
    }
    return false;
}

Realization realize_scenario(const Investors& investors, const NoiseSpec& noise,
                             const TimeGrid& grid, std::uint64_t seed) {
    Realization out;
    out.grid = grid;
    const int d = investors.exposure.empty() ? noise.dim() : investors.exposure.front().dim();

    bool any_stochastic = false;
    for (const auto& spec : investors.exposure) {
        if (spec.stochastic()) any_stochastic = true;
    }
    Eigen::MatrixXd dw;
    if (any_stochastic) {
        dw = brownian_increments(grid, d, seed);
    }

    out.zeta_sum = PathGrid(grid, d);
    for (const auto& spec : investors.exposure) {
        out.zeta.push_back(realize(spec, grid, dw));
        out.zeta_sum.values += out.zeta.back().path.values;
    }
    out.psi = noise.level_path(grid);
    out.psi_dot = noise.rate_path(grid);
    out.psi_drift = noise.rate_drift_path(grid);
    return out;
}

ValidationReport validate_market(const Market& market, const Investors& investors,
                                 const NoiseSpec& noise, bool frictional_requested) {
    ValidationReport report;
    const int d = market.num_assets;
    if (d < 1) {
        throw BadDimension("need at least one asset");
    }
    if (market.covariance.rows() != d || market.covariance.cols() != d) {
        throw BadDimension("covariance must be d x d");
    }
    if (market.cost.rows() != d || market.cost.cols() != d) {
        throw BadDimension("cost matrix must be d x d");
    }
    if (market.discount_rate < 0.0) {
        throw BadDimension("discount rate must be nonnegative");
    }
    if (!(market.horizon > 0.0)) {
        throw BadDimension("horizon must be positive");
    }

    const double scale = std::max(1.0, market.covariance.cwiseAbs().maxCoeff());
    report.covariance_symmetry_gap =
        (market.covariance - market.covariance.transpose()).cwiseAbs().maxCoeff();
    if (report.covariance_symmetry_gap > 1e-12 * scale) {
        throw NonSpdCovariance("covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(market.covariance);
    if (es.info() != Eigen::Success) {
        throw SpectralFailure("covariance eigensolve failed");
    }
    report.covariance_min_eigenvalue = es.eigenvalues().minCoeff();
    if (!(report.covariance_min_eigenvalue > 0.0)) {
        throw NonSpdCovariance("covariance has a nonpositive eigenvalue");
    }

    Eigen::MatrixXd off = market.cost;
    off.diagonal().setZero();
    report.cost_max_offdiagonal = d > 1 ? off.cwiseAbs().maxCoeff() : 0.0;
    report.cost_min_diagonal = market.cost.diagonal().minCoeff();
    if (report.cost_max_offdiagonal != 0.0) {
        throw NonDiagonalCost("cost matrix must be diagonal");
    }
    if (!(report.cost_min_diagonal > 0.0)) {
        throw NonDiagonalCost("cost diagonal must be strictly positive");
    }

    aggregate(investors);  // investor-side checks
    for (const auto& spec : investors.exposure) {
        if (spec.dim() != d) {
            throw DimensionMismatch("exposure dimension does not match asset count");
        }
    }
    if (noise.dim() != d) {
        throw DimensionMismatch("noise dimension does not match asset count");
    }

    report.noise_terminal_rate = noise.rate(market.horizon).cwiseAbs().maxCoeff();
    report.frictional_checked = frictional_requested;
    if (frictional_requested && report.noise_terminal_rate > 1e-10) {
        throw InadmissibleNoise("noise rate must vanish at the horizon for frictional regimes");
    }
    if (!noise.is_zero() && std::abs(noise.horizon() - market.horizon) > 1e-12) {
        throw InadmissibleNoise("noise spec horizon differs from the market horizon");
    }
    return report;
}

}  // namespace mkteq
