#include "mkteq/frictionless.hpp"

#include <cmath>

namespace mkteq::frictionless {

namespace {

void check_investor(const Investors& investors, int n) {
    if (n < 0 || n >= investors.count()) {
        throw BadIndex("investor index out of range");
    }
}

Eigen::MatrixXd sigma_inverse(const Market& market) {
    Eigen::LLT<Eigen::MatrixXd> llt(market.covariance);
    if (llt.info() != Eigen::Success) {
        throw NonSpdCovariance("covariance is not positive definite");
    }
    return llt.solve(Eigen::MatrixXd::Identity(market.num_assets, market.num_assets));
}

// zeta_{-n} - psi on the grid.
Eigen::MatrixXd net_exposure_without(const Realization& real, int n) {
    return real.zeta_sum.values - real.zeta[n].path.values - real.psi.values;
}

}  // namespace

PathGrid competitive_returns(const Market& market, const Investors& investors,
                             const Realization& real) {
    const Aggregates agg = aggregate(investors);
    Eigen::MatrixXd net = real.zeta_sum.values - real.psi.values;
    return PathGrid(real.grid, net * market.covariance.transpose() / agg.delta);
}

std::vector<PathGrid> competitive_demands(const Market& market, const Investors& investors,
                                          const Realization& real, const PathGrid& nu) {
    if (!(nu.grid == real.grid)) {
        throw GridMismatch("returns path is on a different grid");
    }
    const Eigen::MatrixXd sigma_inv = sigma_inverse(market);
    Eigen::MatrixXd merton = nu.values * sigma_inv.transpose();
    std::vector<PathGrid> out;
    out.reserve(investors.count());
    for (int m = 0; m < investors.count(); ++m) {
        out.emplace_back(real.grid,
                         investors.tolerance(m) * merton - real.zeta[m].path.values);
    }
    return out;
}

PathGrid price_impact_returns(const Market& market, const Investors& investors,
                              const Realization& real, int n, const PathGrid& phi) {
    check_investor(investors, n);
    if (!(phi.grid == real.grid)) {
        throw GridMismatch("demand path is on a different grid");
    }
    const Aggregates agg = aggregate(investors);
    Eigen::MatrixXd net = net_exposure_without(real, n) - phi.values;
    return PathGrid(real.grid, net * market.covariance.transpose() / agg.delta_minus(n));
}

PathGrid best_response_demand(const Market& market, const Investors& investors,
                              const Realization& real, int n) {
    (void)market;
    check_investor(investors, n);
    const Aggregates agg = aggregate(investors);
    const double ln = agg.lambda(n);
    Eigen::MatrixXd values =
        (ln * net_exposure_without(real, n) - agg.lambda_minus(n) * real.zeta[n].path.values) /
        (ln + 1.0);
    return PathGrid(real.grid, std::move(values));
}

PathGrid best_response_returns(const Market& market, const Investors& investors,
                               const Realization& real, int n) {
    check_investor(investors, n);
    const Aggregates agg = aggregate(investors);
    const double ln = agg.lambda(n);
    Eigen::MatrixXd mu_minus =
        net_exposure_without(real, n) * market.covariance.transpose() / agg.delta_minus(n);
    Eigen::MatrixXd mu = (real.zeta_sum.values - real.psi.values) * market.covariance.transpose() /
                         agg.delta;
    return PathGrid(real.grid, (ln * mu_minus + mu) / (ln + 1.0));
}

PathGrid revealed_exposure(const Market& market, const Investors& investors, const PathGrid& nu,
                           const PathGrid& phi, int m) {
    check_investor(investors, m);
    require_same_grid(nu, phi);
    const Eigen::MatrixXd sigma_inv = sigma_inverse(market);
    return PathGrid(nu.grid,
                    investors.tolerance(m) * (nu.values * sigma_inv.transpose()) - phi.values);
}

PathGrid nash_returns(const Market& market, const Investors& investors, const Realization& real) {
    const Aggregates agg = aggregate(investors);
    Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(real.grid.nodes(), market.num_assets);
    for (int m = 0; m < investors.count(); ++m) {
        weighted += agg.lambda(m) * real.zeta[m].path.values;
    }
    Eigen::MatrixXd net = real.zeta_sum.values - real.psi.values - weighted;
    const double denom = agg.delta * one_minus_sum_lambda_sq(agg.lambda);
    return PathGrid(real.grid, net * market.covariance.transpose() / denom);
}

std::vector<PathGrid> nash_demands(const Market& market, const Investors& investors,
                                   const Realization& real, const PathGrid& nu) {
    if (!(nu.grid == real.grid)) {
        throw GridMismatch("returns path is on a different grid");
    }
    const Aggregates agg = aggregate(investors);
    const Eigen::MatrixXd sigma_inv = sigma_inverse(market);
    Eigen::MatrixXd merton = nu.values * sigma_inv.transpose();
    std::vector<PathGrid> out;
    out.reserve(investors.count());
    for (int m = 0; m < investors.count(); ++m) {
        out.emplace_back(real.grid, agg.lambda(m) * agg.delta_minus(m) * merton -
                                        agg.lambda_minus(m) * real.zeta[m].path.values);
    }
    return out;
}

LiquidityPremium liquidity_premium(const Market& market, const Investors& investors,
                                   const Realization& real) {
    const Aggregates agg = aggregate(investors);
    PathGrid nash = nash_returns(market, investors, real);
    PathGrid comp = competitive_returns(market, investors, real);
    PathGrid direct = nash - comp;

    // Same premium through the weighted competitive demands.
    std::vector<PathGrid> demands = competitive_demands(market, investors, real, comp);
    Eigen::MatrixXd weighted = Eigen::MatrixXd::Zero(real.grid.nodes(), market.num_assets);
    for (int m = 0; m < investors.count(); ++m) {
        weighted += agg.lambda(m) * demands[m].values;
    }
    const double denom = agg.delta * one_minus_sum_lambda_sq(agg.lambda);
    PathGrid via_demands(real.grid, weighted * market.covariance.transpose() / denom);

    return {direct, max_abs_diff(direct, via_demands)};
}

double utility_surplus(const Market& market, const Investors& investors, const Realization& real,
                       int m, const PathGrid& nu, const PathGrid& phi) {
    check_investor(investors, m);
    require_same_grid(nu, phi);
    if (!(nu.grid == real.grid)) {
        throw GridMismatch("surplus inputs are on a different grid");
    }
    const double inv_2delta = 0.5 / investors.tolerance(m);
    Eigen::VectorXd integrand(real.grid.nodes());
    for (int k = 0; k < real.grid.nodes(); ++k) {
        const Eigen::VectorXd p = phi.at(k);
        const Eigen::VectorXd sp = market.covariance * p;
        const Eigen::VectorXd sz = market.covariance * real.zeta[m].path.at(k);
        const double gain = p.dot(nu.at(k));
        const double risk = inv_2delta * (p.dot(sp) + 2.0 * p.dot(sz));
        integrand(k) = std::exp(-market.discount_rate * real.grid.t(k)) * (gain - risk);
    }
    return trapezoid(real.grid, integrand);
}

double nash_surplus_limit(const Market& market, const Investors& investors,
                          const Realization& real, int m) {
    check_investor(investors, m);
    const Aggregates agg = aggregate(investors);
    const double coef = 0.25 / agg.delta_minus(m);
    Eigen::VectorXd integrand(real.grid.nodes());
    for (int k = 0; k < real.grid.nodes(); ++k) {
        Eigen::VectorXd net = real.zeta_sum.values.row(k).transpose() -
                              real.zeta[m].path.at(k) - real.psi.at(k);
        integrand(k) = std::exp(-market.discount_rate * real.grid.t(k)) * coef *
                       net.dot(market.covariance * net);
    }
    return trapezoid(real.grid, integrand);
}

EquilibriumResult competitive_equilibrium(const Market& market, const Investors& investors,
                                          const Realization& real) {
    EquilibriumResult out;
    out.regime = Regime::frictionless_competitive;
    out.returns = competitive_returns(market, investors, real);
    out.demands = competitive_demands(market, investors, real, out.returns);
    return out;
}

EquilibriumResult nash_equilibrium(const Market& market, const Investors& investors,
                                   const Realization& real) {
    EquilibriumResult out;
    out.regime = Regime::frictionless_nash;
    out.returns = nash_returns(market, investors, real);
    out.demands = nash_demands(market, investors, real, out.returns);
    return out;
}

}  // namespace mkteq::frictionless
