#include "mkteq/friction_kernel.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace mkteq {

FrictionKernel::FrictionKernel(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& covariance,
                               double mult, double discount_rate, double horizon)
    : r_(discount_rate), T_(horizon) {
    const int d = static_cast<int>(cost.rows());
    if (covariance.rows() != d || covariance.cols() != d) {
        throw DimensionMismatch("kernel inputs must share the dimension");
    }
    if (!(mult > 0.0)) {
        throw BadDimension("kernel multiplier must be positive");
    }
    Eigen::VectorXd lam = cost.diagonal();
    if ((lam.array() <= 0.0).any()) {
        throw NonDiagonalCost("cost diagonal must be strictly positive");
    }

    // Diagonalize through the symmetric similarity Lambda^{-1/2} Sigma Lambda^{-1/2}.
    Eigen::VectorXd lam_isqrt = lam.array().rsqrt();
    Eigen::MatrixXd sym = mult * lam_isqrt.asDiagonal() * covariance * lam_isqrt.asDiagonal();
    sym = 0.5 * (sym + sym.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) {
        throw SpectralFailure("kernel eigensolve did not converge");
    }
    eigs_ = es.eigenvalues();
    if ((eigs_.array() <= 0.0).any()) {
        throw SpectralFailure("kernel matrix has a nonpositive eigenvalue");
    }
    V_ = lam_isqrt.asDiagonal() * es.eigenvectors();
    V_inv_ = es.eigenvectors().transpose() * lam.array().sqrt().matrix().asDiagonal();
    B_ = mult * lam.cwiseInverse().asDiagonal() * covariance;

    sqrt_delta_ = (eigs_.array() + 0.25 * r_ * r_).sqrt();
}

double FrictionKernel::g(int i, double t) const { return std::cosh(sqrt_delta_(i) * (T_ - t)); }

double FrictionKernel::g_dot(int i, double t) const {
    return -sqrt_delta_(i) * std::sinh(sqrt_delta_(i) * (T_ - t));
}

double FrictionKernel::w_hat(int i, double t) const {
    const double sd = sqrt_delta_(i);
    const double delta = eigs_(i) + 0.25 * r_ * r_;
    const double e2 = std::exp(-2.0 * sd * (T_ - t));
    return 0.5 * (delta * (1.0 + e2) + 0.5 * r_ * sd * (1.0 - e2));
}

double FrictionKernel::F_scalar(int i, double t) const {
    const double sd = sqrt_delta_(i);
    const double e2 = std::exp(-2.0 * sd * (T_ - t));
    return eigs_(i) * sd * (1.0 - e2) / (2.0 * w_hat(i, t));
}

Eigen::MatrixXd FrictionKernel::Delta() const {
    return B_ + 0.25 * r_ * r_ * Eigen::MatrixXd::Identity(dim(), dim());
}

Eigen::MatrixXd FrictionKernel::G(double t) const {
    Eigen::VectorXd diag(dim());
    for (int i = 0; i < dim(); ++i) diag(i) = g(i, t);
    return V_ * diag.asDiagonal() * V_inv_;
}

Eigen::MatrixXd FrictionKernel::G_dot(double t) const {
    Eigen::VectorXd diag(dim());
    for (int i = 0; i < dim(); ++i) diag(i) = g_dot(i, t);
    return V_ * diag.asDiagonal() * V_inv_;
}

Eigen::MatrixXd FrictionKernel::F(double t) const {
    Eigen::VectorXd diag(dim());
    for (int i = 0; i < dim(); ++i) diag(i) = F_scalar(i, t);
    return V_ * diag.asDiagonal() * V_inv_;
}

FrictionKernel build_kernel(const Market& market, double delta_bar) {
    if (!(delta_bar > 0.0)) {
        throw BadDimension("aggregate tolerance must be positive");
    }
    return FrictionKernel(market.cost, market.covariance, 0.5 / delta_bar, market.discount_rate,
                          market.horizon);
}

Eigen::MatrixXd cosh_sqrt_series(const Eigen::MatrixXd& M, double tau, int terms) {
    const int d = static_cast<int>(M.rows());
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd acc = term;
    for (int k = 0; k < terms; ++k) {
        term = term * M * (tau * tau / ((2.0 * k + 1.0) * (2.0 * k + 2.0)));
        acc += term;
    }
    return acc;
}

Eigen::MatrixXd sqrt_sinh_sqrt_series(const Eigen::MatrixXd& M, double tau, int terms) {
    Eigen::MatrixXd term = tau * M;
    Eigen::MatrixXd acc = term;
    for (int k = 0; k < terms; ++k) {
        term = term * M * (tau * tau / ((2.0 * k + 2.0) * (2.0 * k + 3.0)));
        acc += term;
    }
    return acc;
}

}  // namespace mkteq
