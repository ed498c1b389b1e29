#include "mkteq/frictional.hpp"

#include <cmath>

namespace mkteq::frictional {

namespace {

Eigen::MatrixXd sigma_inverse(const Market& market) {
    Eigen::LLT<Eigen::MatrixXd> llt(market.covariance);
    if (llt.info() != Eigen::Success) {
        throw NonSpdCovariance("covariance is not positive definite");
    }
    return llt.solve(Eigen::MatrixXd::Identity(market.num_assets, market.num_assets));
}

void check_investor(const Investors& investors, int n) {
    if (n < 0 || n >= investors.count()) {
        throw BadIndex("investor index out of range");
    }
}

// a^{psi_dot} - r psi_dot on the grid.
PathGrid noise_drift_term(const Market& market, const Realization& real) {
    return PathGrid(real.grid,
                    real.psi_drift.values - market.discount_rate * real.psi_dot.values);
}

}  // namespace

NashKernel equal_tolerance_coupling(int num_investors) {
    const int n = num_investors;
    if (n < 2) {
        throw WrongInvestorCount("coupling needs at least two investors");
    }
    NashKernel out;
    out.C = Eigen::MatrixXd::Constant(n, n, 1.0 / (n + 1.0));
    out.C.diagonal().setConstant(1.0);
    out.c_eigs = Eigen::VectorXd::Constant(n, n / (n + 1.0));
    out.c_eigs(0) = 2.0 * n / (n + 1.0);

    // Orthonormal basis with the constant vector first (Helmert completion).
    out.right = Eigen::MatrixXd::Zero(n, n);
    out.right.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    for (int k = 1; k < n; ++k) {
        const double norm = std::sqrt(k * (k + 1.0));
        for (int j = 0; j < k; ++j) {
            out.right(j, k) = 1.0 / norm;
        }
        out.right(k, k) = -k / norm;
    }
    out.left = out.right.transpose();
    return out;
}

NashKernel two_investor_coupling(double delta_1, double delta_2) {
    if (!(delta_1 > 0.0) || !(delta_2 > 0.0)) {
        throw BadDimension("tolerances must be positive");
    }
    const double delta = delta_1 + delta_2;
    NashKernel out;
    out.C.resize(2, 2);
    out.C << delta + delta_1, delta_1, delta_2, delta + delta_2;
    out.c_eigs.resize(2);
    out.c_eigs << 2.0 * delta, delta;
    out.right.resize(2, 2);
    out.right << delta_1 / delta, 1.0, delta_2 / delta, -1.0;
    out.left.resize(2, 2);
    out.left << 1.0, 1.0, delta_2 / delta, -delta_1 / delta;
    return out;
}

ComboProcess tracking_combo(const Market& market, const Investors& investors,
                            const Realization& real, int n) {
    check_investor(investors, n);
    const Aggregates agg = aggregate(investors);
    const int N = investors.count();
    const bool equal = equal_tolerances(investors);
    if (!equal && N != 2) {
        throw UnequalToleranceUnsupported(
            "tracking target needs equal tolerances unless N = 2");
    }

    const double ln = agg.lambda(n);
    ComboProcess combo(real.grid, market.num_assets);
    for (int m = 0; m < N; ++m) {
        const double coef = (m == n) ? -agg.lambda_minus(n) / (ln + 1.0) : ln / (ln + 1.0);
        combo.add_term(coef, &real.zeta[m]);
    }
    combo.add_deterministic(-ln / (ln + 1.0) * real.psi);

    const double noise_coef = equal
                                  ? 2.0 * (agg.delta / N) / (N + 1.0)
                                  : 2.0 * investors.tolerance(0) * investors.tolerance(1) /
                                        (agg.delta + investors.tolerance(n));
    Eigen::MatrixXd coef_mat = noise_coef * sigma_inverse(market) * market.cost;
    combo.add_deterministic(apply_matrix(coef_mat, noise_drift_term(market, real)));
    return combo;
}

FrictionKernel best_response_kernel(const Market& market, const Investors& investors, int n) {
    check_investor(investors, n);
    const int N = investors.count();
    if (equal_tolerances(investors)) {
        return build_kernel(market, investors.tolerance.sum() / N);
    }
    if (N != 2) {
        throw UnequalToleranceUnsupported("best response needs equal tolerances unless N = 2");
    }
    const double d1 = investors.tolerance(0);
    const double d2 = investors.tolerance(1);
    const double mult = (d1 + d2 + investors.tolerance(n)) / (6.0 * d1 * d2);
    return FrictionKernel(market.cost, market.covariance, mult, market.discount_rate,
                          market.horizon);
}

TrackingTarget tracking_target(const Market& market, const Investors& investors,
                               const Realization& real, int n, Exec exec) {
    ComboProcess combo = tracking_combo(market, investors, real, n);
    FrictionKernel kernel = best_response_kernel(market, investors, n);
    return {combo.to_path(), target_transform(kernel, combo, exec)};
}

FbsdeSolution best_response(const Market& market, const Investors& investors,
                            const Realization& real, int n, Exec exec) {
    ComboProcess combo = tracking_combo(market, investors, real, n);
    FrictionKernel kernel = best_response_kernel(market, investors, n);
    return solve_linear_fbsde(kernel, combo, exec);
}

PathGrid best_response_returns(const Market& market, const Investors& investors,
                               const Realization& real, int n) {
    check_investor(investors, n);
    if (!equal_tolerances(investors)) {
        throw UnequalToleranceUnsupported("best-response returns need equal tolerances");
    }
    const int N = investors.count();
    PathGrid base = frictionless::best_response_returns(market, investors, real, n);
    Eigen::MatrixXd coef = (2.0 * N / (N * N - 1.0)) * market.cost;
    return base + apply_matrix(coef, noise_drift_term(market, real));
}

PathGrid nash_friction_premium(const Market& market, int num_investors, const Realization& real) {
    if (num_investors < 2) {
        throw WrongInvestorCount("friction premium needs at least two investors");
    }
    Eigen::MatrixXd coef = (2.0 / (num_investors * (num_investors - 1.0))) * market.cost;
    return apply_matrix(coef, noise_drift_term(market, real));
}

EquilibriumResult nash_equilibrium(const Market& market, const Investors& investors,
                                   const Realization& real, Exec exec) {
    if (!equal_tolerances(investors)) {
        throw UnequalToleranceUnsupported("frictional Nash needs equal tolerances");
    }
    const int N = investors.count();
    const double delta_bar = investors.tolerance.sum() / N;

    EquilibriumResult out;
    out.regime = Regime::frictional_nash;
    out.returns = frictionless::nash_returns(market, investors, real) +
                  nash_friction_premium(market, N, real);

    // Stacked demands in the eigenbasis of C (x) B. The clearing coordinate
    // evolves with eigenvalue 2N/(N+1) and its solution is -psi by the
    // market-clearing identities, so it is substituted exactly; only the
    // deviation coordinates (eigenvalue N/(N+1), shared kernel) are solved.
    const NashKernel coupling = equal_tolerance_coupling(N);
    FrictionKernel dev_kernel(market.cost, market.covariance,
                              (N / (N + 1.0)) * 0.5 / delta_bar, market.discount_rate,
                              market.horizon);

    std::vector<FbsdeSolution> dev(N - 1);
    for (int k = 1; k < N; ++k) {
        ComboProcess combo(real.grid, market.num_assets);
        for (int m = 0; m < N; ++m) {
            const double w = coupling.right(m, k);
            if (w != 0.0) {
                combo.add_term(-w * (N - 1.0) / N, &real.zeta[m]);
            }
        }
        dev[k - 1] = solve_linear_fbsde(dev_kernel, combo, exec);
    }

    out.demands.assign(N, PathGrid(real.grid, market.num_assets));
    out.rates.assign(N, PathGrid(real.grid, market.num_assets));
    for (int m = 0; m < N; ++m) {
        out.demands[m].values = -real.psi.values / N;
        out.rates[m].values = -real.psi_dot.values / N;
        for (int k = 1; k < N; ++k) {
            const double w = coupling.right(m, k);
            out.demands[m].values += w * dev[k - 1].phi.values;
            out.rates[m].values += w * dev[k - 1].rate.values;
        }
    }
    return out;
}

EquilibriumResult nash_equilibrium_two_investors(const Market& market, const Investors& investors,
                                                 const Realization& real, Exec exec) {
    if (investors.count() != 2) {
        throw WrongInvestorCount("two-investor equilibrium needs exactly two investors");
    }
    const double d1 = investors.tolerance(0);
    const double d2 = investors.tolerance(1);
    const double delta = d1 + d2;

    EquilibriumResult out;
    out.regime = Regime::frictional_nash_two_investor;
    out.returns = frictionless::nash_returns(market, investors, real) +
                  apply_matrix(market.cost, noise_drift_term(market, real));

    // Coordinates along the right eigenvectors (delta_1, delta_2)/delta and
    // (1, -1) of C. The first carries eigenvalue 2 delta and equals -psi by
    // clearing; the second carries eigenvalue delta and is solved.
    FrictionKernel dev_kernel(market.cost, market.covariance, delta / (6.0 * d1 * d2),
                              market.discount_rate, market.horizon);
    ComboProcess combo(real.grid, market.num_assets);
    combo.add_term(-d2 / (2.0 * delta), &real.zeta[0]);
    combo.add_term(d1 / (2.0 * delta), &real.zeta[1]);
    combo.add_deterministic(-(d2 - d1) / (2.0 * delta) * real.psi);
    Eigen::MatrixXd noise_coef =
        (3.0 * d1 * d2 * (d2 - d1) / (delta * delta)) * sigma_inverse(market) * market.cost;
    combo.add_deterministic(apply_matrix(noise_coef, noise_drift_term(market, real)));

    FbsdeSolution dev = solve_linear_fbsde(dev_kernel, combo, exec);

    out.demands.assign(2, PathGrid(real.grid, market.num_assets));
    out.rates.assign(2, PathGrid(real.grid, market.num_assets));
    out.demands[0].values = -(d1 / delta) * real.psi.values + dev.phi.values;
    out.demands[1].values = -(d2 / delta) * real.psi.values - dev.phi.values;
    out.rates[0].values = -(d1 / delta) * real.psi_dot.values + dev.rate.values;
    out.rates[1].values = -(d2 / delta) * real.psi_dot.values - dev.rate.values;
    return out;
}

EquilibriumResult best_response_equilibrium(const Market& market, const Investors& investors,
                                            const Realization& real, int n, Exec exec) {
    check_investor(investors, n);
    if (!equal_tolerances(investors)) {
        throw UnequalToleranceUnsupported("best-response equilibrium needs equal tolerances");
    }
    const Aggregates agg = aggregate(investors);
    const int N = investors.count();
    const double delta_bar = agg.delta / N;
    const double ln = agg.lambda(n);

    EquilibriumResult out;
    out.regime = Regime::frictional_best_response;
    out.returns = best_response_returns(market, investors, real, n);

    // Price takers track phi_hat_m(nu) = delta_bar Sigma^{-1} nu - zeta_m; the
    // strategic investor tracks TP_n. All N targets share the kernel B, so
    // demands decompose into the (known) average -psi/N plus deviations.
    const double a_other = ln / ((ln + 1.0) * agg.delta_minus(n)) + 1.0 / ((ln + 1.0) * agg.delta);
    const double a_own = 1.0 / ((ln + 1.0) * agg.delta);
    Eigen::MatrixXd friction_coef =
        delta_bar * (2.0 * N / (N * N - 1.0)) * sigma_inverse(market) * market.cost;
    PathGrid friction_det = apply_matrix(friction_coef, noise_drift_term(market, real));

    std::vector<ComboProcess> targets;
    targets.reserve(N);
    for (int m = 0; m < N; ++m) {
        if (m == n) {
            targets.push_back(tracking_combo(market, investors, real, n));
            continue;
        }
        ComboProcess combo(real.grid, market.num_assets);
        for (int j = 0; j < N; ++j) {
            double coef = delta_bar * ((j == n) ? a_own : a_other);
            if (j == m) coef -= 1.0;
            combo.add_term(coef, &real.zeta[j]);
        }
        combo.add_deterministic(-delta_bar * a_other * real.psi);
        combo.add_deterministic(friction_det);
        targets.push_back(std::move(combo));
    }

    ComboProcess mean_target(real.grid, market.num_assets);
    for (const auto& t : targets) {
        mean_target.add_scaled(t, 1.0 / N);
    }

    FrictionKernel kernel = build_kernel(market, delta_bar);
    out.demands.assign(N, PathGrid(real.grid, market.num_assets));
    out.rates.assign(N, PathGrid(real.grid, market.num_assets));
    for (int m = 0; m < N; ++m) {
        ComboProcess dev_target(real.grid, market.num_assets);
        dev_target.add_scaled(targets[m], 1.0);
        dev_target.add_scaled(mean_target, -1.0);
        FbsdeSolution dev = solve_linear_fbsde(kernel, dev_target, exec);
        out.demands[m].values = -real.psi.values / N + dev.phi.values;
        out.rates[m].values = -real.psi_dot.values / N + dev.rate.values;
    }
    return out;
}

PathGrid competitive_residual(const Market& market, const Investors& investors,
                              const Realization& real, const PathGrid& nu, const PathGrid& phi,
                              const PathGrid& rate, int m) {
    check_investor(investors, m);
    const Eigen::MatrixXd sigma_inv = sigma_inverse(market);
    PathGrid target(real.grid,
                    investors.tolerance(m) * (nu.values * sigma_inv.transpose()) -
                        real.zeta[m].path.values);
    Eigen::MatrixXd B = market.cost.diagonal().cwiseInverse().asDiagonal() * market.covariance /
                        (2.0 * investors.tolerance(m));
    return fbsde_residual(B, market.discount_rate, target, phi, rate);
}

}  // namespace mkteq::frictional
