#pragma once

#include <vector>

#include "mkteq/market.hpp"

namespace mkteq::oracle {

// Brute-force routes to the same answers the closed forms give. Everything
// here works on one realized (hence deterministic) path and avoids the
// lambda-algebra shortcuts of the production formulas.

// Per-node quadratic maximization of the impact-adjusted objective:
// solve k_n Sigma phi = Sigma ((zeta_{-n} - psi)/delta_{-n} - zeta_n/delta_n)
// by LU at every node.
PathGrid best_response_pointwise(const Market& market, const Investors& investors,
                                 const Realization& real, int n);

enum class IterationStyle { jacobi, gauss_seidel };

struct FixedPointResult {
    PathGrid nu;
    int iterations = 0;
    double contraction_ratio = 0.0;  // last observed ratio of successive changes
};

// Iterates the simultaneous revealed-exposure best-response map from the zero
// profile until the sup-norm change drops below tol, then reads the returns
// off the clearing condition. Throws NoConvergence past max_iters.
FixedPointResult nash_fixed_point(const Market& market, const Investors& investors,
                                  const Realization& real, int max_iters, double tol,
                                  IterationStyle style = IterationStyle::jacobi);

// Assembles the simultaneous revealed-exposure equations as one (N d) x (N d)
// linear system per node and solves it by LU; returns the implied returns.
PathGrid nash_pointwise(const Market& market, const Investors& investors,
                        const Realization& real);

// Discretization of a concave linear-quadratic tracking problem
//   max int_0^T e^{-rt} (phi' ell - 1/2 phi' Q phi - phi_dot' R phi_dot) dt,
// phi(0) = 0, midpoint rule in the node values phi(t_1..t_K). The first-order
// conditions form a block-tridiagonal system solved by block elimination.
struct DiscretizedLq {
    TimeGrid grid;
    std::string tag;
    std::vector<Eigen::MatrixXd> lower, diag, upper;  // K blocks of d x d
    std::vector<Eigen::VectorXd> rhs;
};

DiscretizedLq assemble_lq(const TimeGrid& grid, const PathGrid& ell, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R, double discount_rate, std::string tag);

struct QpSolution {
    PathGrid phi;
    PathGrid rate;          // interval rates mapped to nodes
    double terminal_rate;   // last interval rate, should approach 0
};

QpSolution solve_lq(const DiscretizedLq& problem);

// The frictional best-response objective of investor n under equal
// tolerances, solved as a QP on the given path.
QpSolution frictional_qp(const Market& market, const Investors& investors,
                         const Realization& real, int n);

struct ClearingReport {
    double max_demand_violation = 0.0;
    double max_rate_violation = 0.0;
    double tol = 0.0;
    bool pass = false;
};

ClearingReport verify_clearing(const EquilibriumResult& result, const Realization& real,
                               double tol);

}  // namespace mkteq::oracle
