#pragma once

#include <vector>

#include "mkteq/fbsde.hpp"
#include "mkteq/frictionless.hpp"
#include "mkteq/market.hpp"

namespace mkteq::frictional {

// Coupling matrix of the stacked Nash FBSDE system and its eigen data. The
// block operator is C (x) B_unit; its eigenvalues are the products of the two
// spectra. right * left == I with left = right^{-1}.
struct NashKernel {
    Eigen::MatrixXd C;
    Eigen::VectorXd c_eigs;
    Eigen::MatrixXd right;  // columns are right eigenvectors of C
    Eigen::MatrixXd left;   // rows recover the eigen-coordinates
};

// Equal tolerances: 1 on the diagonal, 1/(N+1) off it. Orthonormal basis with
// the constant vector first, so the clearing direction is eigen-coordinate 0.
NashKernel equal_tolerance_coupling(int num_investors);

// Two heterogeneous investors: C = [[delta+delta_1, delta_1], [delta_2, delta+delta_2]],
// eigenvalues 2*delta (clearing direction) and delta.
NashKernel two_investor_coupling(double delta_1, double delta_2);

struct TrackingTarget {
    PathGrid tp;         // TP_n
    PathGrid tp_transform;  // the kernel-weighted transform of TP_n
};

// TP_n = frictionless best response + (2 delta_bar Sigma^{-1} Lambda / (N+1)) (a - r psi_dot)
// under equal tolerances; for N = 2 with heterogeneous tolerances the
// noise coefficient becomes 2 delta_1 delta_2 Sigma^{-1} Lambda / (delta + delta_n).
ComboProcess tracking_combo(const Market& market, const Investors& investors,
                            const Realization& real, int n);
TrackingTarget tracking_target(const Market& market, const Investors& investors,
                               const Realization& real, int n, Exec exec = default_exec());

// Kernel matrix of investor n's best-response FBSDE: Lambda^{-1} Sigma / (2 delta_bar),
// or (delta + delta_n) Lambda^{-1} Sigma / (6 delta_1 delta_2) when N = 2.
FrictionKernel best_response_kernel(const Market& market, const Investors& investors, int n);

// Explicit best-response demand and trading rate of investor n.
FbsdeSolution best_response(const Market& market, const Investors& investors,
                            const Realization& real, int n, Exec exec = default_exec());

// Equal tolerances: mu_{Lambda,n} = mu_hat_n + (2 N Lambda / (N^2 - 1)) (a - r psi_dot).
PathGrid best_response_returns(const Market& market, const Investors& investors,
                               const Realization& real, int n);

// The friction term of the Nash returns: (2 Lambda / (N (N-1))) (a - r psi_dot).
PathGrid nash_friction_premium(const Market& market, int num_investors, const Realization& real);

// Full equilibria. Demands are solved in the eigenbasis of the coupling
// matrix; the clearing coordinate of the unique solution is -psi (rates
// -psi_dot) by the market-clearing identities, and is substituted in closed
// form so that clearing is exact at every node. The remaining coordinates
// are solved numerically.
EquilibriumResult nash_equilibrium(const Market& market, const Investors& investors,
                                   const Realization& real, Exec exec = default_exec());
EquilibriumResult nash_equilibrium_two_investors(const Market& market, const Investors& investors,
                                                 const Realization& real,
                                                 Exec exec = default_exec());
// All-investor demand profile when only n is strategic and the rest trade as
// frictional price takers at the induced returns.
EquilibriumResult best_response_equilibrium(const Market& market, const Investors& investors,
                                            const Realization& real, int n,
                                            Exec exec = default_exec());

// Residual of (phi, rate) against the competitive frictional FBSDE of
// investor m: R = d(rate)/dt - (Lambda^{-1} Sigma / (2 delta_m)) (phi - phi_hat_m) - r rate,
// with phi_hat_m the price-taking demand at nu.
PathGrid competitive_residual(const Market& market, const Investors& investors,
                              const Realization& real, const PathGrid& nu, const PathGrid& phi,
                              const PathGrid& rate, int m);

}  // namespace mkteq::frictional
