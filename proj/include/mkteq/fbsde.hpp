#pragma once

#include <vector>

#include "mkteq/friction_kernel.hpp"
#include "mkteq/parallel.hpp"
#include "mkteq/processes.hpp"

namespace mkteq {

// A linear combination of realized processes plus a deterministic path. This
// is the shape every FBSDE tracking target takes: constant matrices times
// exposure processes plus noise-derived deterministic terms. Conditional
// expectations pass through the combination term by term.
class ComboProcess {
  public:
    struct Term {
        Eigen::MatrixXd coef;
        const RealizedProcess* proc;
    };

    ComboProcess(const TimeGrid& grid, int dim);

    void add_term(double coef, const RealizedProcess* proc);
    void add_term(const Eigen::MatrixXd& coef, const RealizedProcess* proc);
    void add_deterministic(const PathGrid& path);
    void add_scaled(const ComboProcess& other, double scale);

    const TimeGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    bool stochastic() const;
    const std::vector<Term>& terms() const { return terms_; }
    const PathGrid& deterministic_part() const { return deterministic_; }

    Eigen::VectorXd value(int s) const;
    Eigen::VectorXd conditional_mean(int t, int s) const;
    void conditional_mean_into(int t, int s, Eigen::VectorXd& out,
                               Eigen::VectorXd& scratch) const;
    PathGrid to_path() const;

  private:
    TimeGrid grid_;
    int dim_;
    std::vector<Term> terms_;
    PathGrid deterministic_;
};

struct FbsdeSolution {
    PathGrid phi;               // state, phi(0) = 0
    PathGrid rate;              // phi_dot, rate(T) = 0
    PathGrid target_transform;  // the kernel-weighted transform xi_tilde
};

// Kernel-weighted conditional-mean transform of the target:
//   xi_tilde(t) = (Delta G(t) - (r/2) G_dot(t))^{-1}
//                 int_t^T (Delta G(s) - (r/2) G_dot(s)) B e^{-(r/2)(s-t)} E[xi(s)|F(t)] ds,
// trapezoid in s per grid node t. The outer loop over t is the library's
// main parallel kernel.
PathGrid target_transform(const FrictionKernel& kernel, const ComboProcess& target,
                          Exec exec = default_exec());

// Explicit solution of d phi_dot = B (phi - xi) dt + r phi_dot dt (+ dM),
// phi(0) = 0, phi_dot(T) = 0:
//   phi(t)     = int_0^t e^{-int_s^t F(u) du} xi_tilde(s) ds
//   phi_dot(t) = xi_tilde(t) - F(t) phi(t)
// reduced to scalar recursions in the eigenbasis of B.
FbsdeSolution solve_linear_fbsde(const FrictionKernel& kernel, const ComboProcess& target,
                                 Exec exec = default_exec());

// Central-difference residual of (phi, rate) against the FBSDE dynamics:
//   R(t) = d(rate)/dt - B (phi - xi) - r rate
// on interior nodes (first and last row are zero). For a valid solution the
// sup norm shrinks at the quadrature order.
PathGrid fbsde_residual(const Eigen::MatrixXd& B, double discount_rate, const PathGrid& target,
                        const PathGrid& phi, const PathGrid& rate);

}  // namespace mkteq
