#include "mkteq/oracle.hpp"

#include <Eigen/LU>
#include <cmath>
#include <sstream>

namespace mkteq::oracle {

namespace {

void check_deterministic(const Realization& real, const char* what) {
    if (real.stochastic()) {
        throw ModelError(std::string(what) + " needs a deterministic scenario");
    }
}

}  // namespace

PathGrid best_response_pointwise(const Market& market, const Investors& investors,
                                 const Realization& real, int n) {
    if (n < 0 || n >= investors.count()) {
        throw BadIndex("investor index out of range");
    }
    const Aggregates agg = aggregate(investors);
    // Full quadratic coefficient of the impact-adjusted objective; satisfies
    // delta_{-n} k_n = (delta_n + delta) / delta_n.
    const double k_n = 2.0 / agg.delta_minus(n) + 1.0 / investors.tolerance(n);

    Eigen::FullPivLU<Eigen::MatrixXd> lu(k_n * market.covariance);
    if (!lu.isInvertible()) {
        throw SingularSystem("pointwise best-response system is singular");
    }
    PathGrid out(real.grid, market.num_assets);
    for (int k = 0; k < real.grid.nodes(); ++k) {
        Eigen::VectorXd others = real.zeta_sum.values.row(k).transpose() -
                                 real.zeta[n].path.at(k) - real.psi.at(k);
        Eigen::VectorXd rhs =
            market.covariance * (others / agg.delta_minus(n) -
                                 real.zeta[n].path.at(k) / investors.tolerance(n));
        out.values.row(k) = lu.solve(rhs).transpose();
    }
    return out;
}

FixedPointResult nash_fixed_point(const Market& market, const Investors& investors,
                                  const Realization& real, int max_iters, double tol,
                                  IterationStyle style) {
    const Aggregates agg = aggregate(investors);
    const int N = investors.count();
    const int nodes = real.grid.nodes();
    const int d = market.num_assets;

    Eigen::VectorXd alpha(N);
    for (int m = 0; m < N; ++m) {
        const double lm = agg.lambda(m);
        alpha(m) = lm * lm / ((1.0 - lm) * (1.0 + lm));
    }

    // Revealed exposures, iterated simultaneously from the zero profile.
    std::vector<Eigen::MatrixXd> z(N, Eigen::MatrixXd::Zero(nodes, d));
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(nodes, d);
    double prev_change = 0.0;
    double ratio = 0.0;
    int iter = 0;
    for (; iter < max_iters; ++iter) {
        double change = 0.0;
        if (style == IterationStyle::jacobi) {
            std::vector<Eigen::MatrixXd> next(N);
            for (int m = 0; m < N; ++m) {
                next[m] = alpha(m) * (total - z[m] - real.psi.values) +
                          real.zeta[m].path.values / (1.0 + agg.lambda(m));
                change = std::max(change, (next[m] - z[m]).cwiseAbs().maxCoeff());
            }
            z = std::move(next);
        } else {
            for (int m = 0; m < N; ++m) {
                Eigen::MatrixXd next = alpha(m) * (total - z[m] - real.psi.values) +
                                       real.zeta[m].path.values / (1.0 + agg.lambda(m));
                change = std::max(change, (next - z[m]).cwiseAbs().maxCoeff());
                total += next - z[m];
                z[m] = std::move(next);
            }
        }
        if (style == IterationStyle::jacobi) {
            total.setZero();
            for (const auto& zm : z) total += zm;
        }
        if (prev_change > 0.0) {
            ratio = change / prev_change;
        }
        prev_change = change;
        if (change < tol) {
            ++iter;
            break;
        }
    }
    if (prev_change >= tol) {
        std::ostringstream msg;
        msg << "best-response iteration did not converge in " << max_iters
            << " iterations (contraction ratio estimate " << ratio << ")";
        throw NoConvergence(msg.str());
    }

    FixedPointResult out;
    out.nu = PathGrid(real.grid,
                      (total - real.psi.values) * market.covariance.transpose() / agg.delta);
    out.iterations = iter;
    out.contraction_ratio = ratio;
    return out;
}

PathGrid nash_pointwise(const Market& market, const Investors& investors,
                        const Realization& real) {
    const Aggregates agg = aggregate(investors);
    const int N = investors.count();
    const int d = market.num_assets;
    const int dim = N * d;

    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(dim, dim);
    for (int m = 0; m < N; ++m) {
        const double lm = agg.lambda(m);
        const double alpha = lm * lm / ((1.0 - lm) * (1.0 + lm));
        for (int i = 0; i < N; ++i) {
            if (i == m) continue;
            A.block(m * d, i * d, d, d) = -alpha * Eigen::MatrixXd::Identity(d, d);
        }
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        throw SingularSystem("simultaneous revealed-exposure system is singular");
    }

    PathGrid out(real.grid, d);
    Eigen::VectorXd rhs(dim);
    for (int k = 0; k < real.grid.nodes(); ++k) {
        for (int m = 0; m < N; ++m) {
            const double lm = agg.lambda(m);
            const double alpha = lm * lm / ((1.0 - lm) * (1.0 + lm));
            rhs.segment(m * d, d) =
                -alpha * real.psi.at(k) + real.zeta[m].path.at(k) / (1.0 + lm);
        }
        Eigen::VectorXd z = lu.solve(rhs);
        Eigen::VectorXd total = Eigen::VectorXd::Zero(d);
        for (int m = 0; m < N; ++m) {
            total += z.segment(m * d, d);
        }
        out.values.row(k) =
            (market.covariance * (total - real.psi.at(k)) / agg.delta).transpose();
    }
    return out;
}

DiscretizedLq assemble_lq(const TimeGrid& grid, const PathGrid& ell, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R, double discount_rate, std::string tag) {
    if (!(ell.grid == grid)) {
        throw GridMismatch("linear term is on a different grid");
    }
    const int K = grid.steps;
    const int d = ell.dim();
    const double dt = grid.dt();

    DiscretizedLq out;
    out.grid = grid;
    out.tag = std::move(tag);
    out.lower.assign(K, Eigen::MatrixXd());
    out.diag.assign(K, Eigen::MatrixXd());
    out.upper.assign(K, Eigen::MatrixXd());
    out.rhs.assign(K, Eigen::VectorXd());

    // Midpoint discretization of the concave objective in the node values
    // phi_1..phi_K (phi_0 = 0); stationarity gives a block-tridiagonal system.
    auto weight = [&](int k) { return std::exp(-discount_rate * (grid.t(k) + 0.5 * dt)); };
    auto ell_mid = [&](int k) {
        return Eigen::VectorXd(0.5 * (ell.at(k) + ell.at(k + 1)));
    };

    for (int j = 1; j <= K; ++j) {
        const int idx = j - 1;
        const double w_prev = weight(j - 1);
        out.lower[idx] = -(dt / 4.0) * w_prev * Q + (2.0 * w_prev / dt) * R;
        if (j < K) {
            const double w_cur = weight(j);
            out.diag[idx] = -(dt / 4.0) * (w_prev + w_cur) * Q -
                            (2.0 / dt) * (w_prev + w_cur) * R;
            out.upper[idx] = -(dt / 4.0) * w_cur * Q + (2.0 * w_cur / dt) * R;
            out.rhs[idx] = -(dt / 2.0) * (w_prev * ell_mid(j - 1) + w_cur * ell_mid(j));
        } else {
            out.diag[idx] = -(dt / 4.0) * w_prev * Q - (2.0 * w_prev / dt) * R;
            out.upper[idx] = Eigen::MatrixXd::Zero(d, d);
            out.rhs[idx] = -(dt / 2.0) * w_prev * ell_mid(j - 1);
        }
    }
    return out;
}

QpSolution solve_lq(const DiscretizedLq& problem) {
    const int K = problem.grid.steps;
    const int d = static_cast<int>(problem.rhs.front().size());
    const double dt = problem.grid.dt();

    // Block-tridiagonal elimination.
    std::vector<Eigen::MatrixXd> diag(problem.diag);
    std::vector<Eigen::VectorXd> rhs(problem.rhs);
    std::vector<Eigen::FullPivLU<Eigen::MatrixXd>> factors;
    factors.reserve(K);
    factors.emplace_back(diag[0]);
    if (!factors[0].isInvertible()) {
        throw SingularKkt(problem.tag + ": singular pivot block");
    }
    for (int j = 1; j < K; ++j) {
        Eigen::MatrixXd L = factors[j - 1].solve(problem.upper[j - 1]);
        diag[j] -= problem.lower[j] * L;
        rhs[j] -= problem.lower[j] * factors[j - 1].solve(rhs[j - 1]);
        factors.emplace_back(diag[j]);
        if (!factors[j].isInvertible()) {
            throw SingularKkt(problem.tag + ": singular pivot block");
        }
    }

    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(K + 1, d);
    phi.row(K) = factors[K - 1].solve(rhs[K - 1]).transpose();
    for (int j = K - 1; j >= 1; --j) {
        Eigen::VectorXd v =
            factors[j - 1].solve(rhs[j - 1] - problem.upper[j - 1] * phi.row(j + 1).transpose());
        phi.row(j) = v.transpose();
    }

    QpSolution out;
    out.phi = PathGrid(problem.grid, phi);
    Eigen::MatrixXd rates(K + 1, d);
    Eigen::MatrixXd interval = (phi.bottomRows(K) - phi.topRows(K)) / dt;
    rates.row(0) = interval.row(0);
    for (int k = 1; k < K; ++k) {
        rates.row(k) = 0.5 * (interval.row(k - 1) + interval.row(k));
    }
    rates.row(K) = interval.row(K - 1);
    out.rate = PathGrid(problem.grid, rates);
    out.terminal_rate = interval.row(K - 1).cwiseAbs().maxCoeff();
    return out;
}

QpSolution frictional_qp(const Market& market, const Investors& investors,
                         const Realization& real, int n) {
    check_deterministic(real, "frictional QP oracle");
    if (!equal_tolerances(investors)) {
        throw UnequalToleranceUnsupported("frictional QP oracle needs equal tolerances");
    }
    if (n < 0 || n >= investors.count()) {
        throw BadIndex("investor index out of range");
    }
    const int N = investors.count();
    const double delta_bar = investors.tolerance.sum() / N;

    PathGrid ell(real.grid, market.num_assets);
    for (int k = 0; k < real.grid.nodes(); ++k) {
        Eigen::VectorXd others = real.zeta_sum.values.row(k).transpose() -
                                 real.zeta[n].path.at(k) - real.psi.at(k);
        Eigen::VectorXd noise = real.psi_drift.at(k) - market.discount_rate * real.psi_dot.at(k);
        ell.values.row(k) =
            (market.covariance * (others / (delta_bar * (N - 1.0)) -
                                  real.zeta[n].path.at(k) / delta_bar) +
             (2.0 / (N - 1.0)) * market.cost * noise)
                .transpose();
    }
    Eigen::MatrixXd Q = market.covariance * (N + 1.0) / (delta_bar * (N - 1.0));
    Eigen::MatrixXd R = market.cost * (N + 1.0) / (N - 1.0);
    return solve_lq(assemble_lq(real.grid, ell, Q, R, market.discount_rate,
                                "frictional best-response QP"));
}

ClearingReport verify_clearing(const EquilibriumResult& result, const Realization& real,
                               double tol) {
    ClearingReport report;
    report.tol = tol;
    Eigen::MatrixXd total = real.psi.values;
    for (const auto& phi : result.demands) {
        total += phi.values;
    }
    report.max_demand_violation = total.cwiseAbs().maxCoeff();
    if (!result.rates.empty()) {
        Eigen::MatrixXd rate_total = real.psi_dot.values;
        for (const auto& rate : result.rates) {
            rate_total += rate.values;
        }
        report.max_rate_violation = rate_total.cwiseAbs().maxCoeff();
    }
    report.pass = report.max_demand_violation <= tol && report.max_rate_violation <= tol;
    return report;
}

}  // namespace mkteq::oracle
