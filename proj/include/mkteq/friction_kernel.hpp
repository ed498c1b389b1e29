#pragma once

#include <Eigen/Dense>

#include "mkteq/errors.hpp"
#include "mkteq/market.hpp"

namespace mkteq {

// Spectral data for B = mult * Lambda^{-1} Sigma and the matrix functions of
// the explicit FBSDE solution,
//   Delta = B + (r^2/4) I,  G(t) = cosh(sqrt(Delta) (T - t)),
//   F(t)  = -(Delta G(t) - (r/2) G_dot(t))^{-1} B G_dot(t).
// B itself is not symmetric but is similar to the SPD matrix
// Lambda^{-1/2} Sigma Lambda^{-1/2}, so it diagonalizes with positive
// eigenvalues through an orthogonal eigendecomposition of the similar matrix.
// The whole F(t) family shares these eigenvectors, which reduces
// exp(-int F du) to one scalar integral per eigenvalue.
class FrictionKernel {
  public:
    FrictionKernel(const Eigen::MatrixXd& cost, const Eigen::MatrixXd& covariance, double mult,
                   double discount_rate, double horizon);

    int dim() const { return static_cast<int>(eigs_.size()); }
    double r() const { return r_; }
    double T() const { return T_; }
    const Eigen::MatrixXd& B() const { return B_; }
    const Eigen::VectorXd& eigenvalues() const { return eigs_; }
    const Eigen::MatrixXd& eigenvectors() const { return V_; }
    const Eigen::MatrixXd& eigenvectors_inv() const { return V_inv_; }
    double sqrt_delta(int i) const { return sqrt_delta_(i); }

    // Scalar pieces per eigenvalue, in forms that stay bounded for large
    // sqrt(Delta) (T - t):
    //   w(t)     = Delta g(t) - (r/2) g_dot(t)  (always > 0)
    //   w_hat(t) = e^{-sqrt(Delta)(T-t)} w(t)
    //   F(t)     = b sqrt(Delta) sinh(sqrt(Delta)(T-t)) / w(t)
    double g(int i, double t) const;
    double g_dot(int i, double t) const;
    double w_hat(int i, double t) const;
    double F_scalar(int i, double t) const;

    Eigen::MatrixXd Delta() const;
    Eigen::MatrixXd G(double t) const;
    Eigen::MatrixXd G_dot(double t) const;
    Eigen::MatrixXd F(double t) const;

  private:
    Eigen::MatrixXd B_;
    Eigen::VectorXd eigs_;        // eigenvalues of B, all > 0
    Eigen::VectorXd sqrt_delta_;  // sqrt(b_i + r^2/4)
    Eigen::MatrixXd V_, V_inv_;
    double r_;
    double T_;
};

// Kernel of the single-investor frictional problem: B = Lambda^{-1} Sigma / (2 delta_bar).
FrictionKernel build_kernel(const Market& market, double delta_bar);

// Reference power series, used to cross-check the spectral evaluation:
//   cosh(sqrt(M) tau)            = sum_k tau^{2k}/(2k)!     M^k
//   sqrt(M) sinh(sqrt(M) tau)    = sum_k tau^{2k+1}/(2k+1)! M^{k+1}
Eigen::MatrixXd cosh_sqrt_series(const Eigen::MatrixXd& M, double tau, int terms = 30);
Eigen::MatrixXd sqrt_sinh_sqrt_series(const Eigen::MatrixXd& M, double tau, int terms = 30);

}  // namespace mkteq
