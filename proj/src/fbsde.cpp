#include "mkteq/fbsde.hpp"

#include <cmath>

namespace mkteq {

ComboProcess::ComboProcess(const TimeGrid& grid, int dim)
    : grid_(grid), dim_(dim), deterministic_(grid, dim) {}

void ComboProcess::add_term(double coef, const RealizedProcess* proc) {
    add_term(coef * Eigen::MatrixXd::Identity(dim_, dim_), proc);
}

void ComboProcess::add_term(const Eigen::MatrixXd& coef, const RealizedProcess* proc) {
    if (!(proc->path.grid == grid_) || coef.rows() != dim_ || coef.cols() != proc->path.dim()) {
        throw GridMismatch("combo term does not fit");
    }
    terms_.push_back({coef, proc});
}

void ComboProcess::add_deterministic(const PathGrid& path) {
    require_same_grid(deterministic_, path);
    deterministic_.values += path.values;
}

void ComboProcess::add_scaled(const ComboProcess& other, double scale) {
    if (!(other.grid_ == grid_) || other.dim_ != dim_) {
        throw GridMismatch("combo shapes differ");
    }
    for (const auto& term : other.terms_) {
        terms_.push_back({scale * term.coef, term.proc});
    }
    deterministic_.values += scale * other.deterministic_.values;
}

bool ComboProcess::stochastic() const {
    for (const auto& term : terms_) {
        if (term.proc->spec.stochastic()) return true;
    }
    return false;
}

Eigen::VectorXd ComboProcess::value(int s) const {
    Eigen::VectorXd out = deterministic_.at(s);
    for (const auto& term : terms_) {
        out += term.coef * term.proc->path.at(s);
    }
    return out;
}

Eigen::VectorXd ComboProcess::conditional_mean(int t, int s) const {
    Eigen::VectorXd out(dim_), scratch(dim_);
    conditional_mean_into(t, s, out, scratch);
    return out;
}

void ComboProcess::conditional_mean_into(int t, int s, Eigen::VectorXd& out,
                                         Eigen::VectorXd& scratch) const {
    out = deterministic_.values.row(s).transpose();
    for (const auto& term : terms_) {
        scratch.resize(term.proc->path.dim());
        mkteq::conditional_mean_into(*term.proc, t, s, scratch);
        out.noalias() += term.coef * scratch;
    }
}

PathGrid ComboProcess::to_path() const {
    PathGrid out(grid_, dim_);
    for (int k = 0; k < grid_.nodes(); ++k) {
        out.values.row(k) = value(k).transpose();
    }
    return out;
}

namespace {

constexpr int kStackDim = 32;

// Flattened conditional-expectation plan for the solver's inner loop. Each
// leaf applies its class rule through plain loops on raw rows, so the
// parallel region touches no heap and no dynamic dispatch. Sums flatten by
// pushing the combo coefficient down to their parts.
struct LeafPlan {
    enum class Rule { plug_in, martingale, ou } rule;
    Eigen::MatrixXd coef;                // combo-dim x leaf-dim
    const Eigen::MatrixXd* path;
    Eigen::VectorXd ou_mean;
    double ou_kappa = 0.0;
};

void flatten_leaves(const Eigen::MatrixXd& coef, const RealizedProcess& rp,
                    std::vector<LeafPlan>& out) {
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, SumSpec>) {
                for (const auto& part : rp.parts) {
                    flatten_leaves(coef, part, out);
                }
            } else if constexpr (std::is_same_v<T, MartingaleSpec>) {
                out.push_back({LeafPlan::Rule::martingale, coef, &rp.path.values, {}, 0.0});
            } else if constexpr (std::is_same_v<T, OuSpec>) {
                out.push_back(
                    {LeafPlan::Rule::ou, coef, &rp.path.values, spec.mean, spec.reversion});
            } else {
                out.push_back({LeafPlan::Rule::plug_in, coef, &rp.path.values, {}, 0.0});
            }
        },
        rp.spec.kind);
}

// xi_tilde in the eigen-coordinates of B, one column per eigenvalue:
//   xi_tilde_i(t) = (1 / w_hat_i(t)) int_t^T b_i e^{-(sqrtDelta_i + r/2)(s-t)}
//                                    w_hat_i(s) [V^{-1} E[xi(s)|F(t)]]_i ds.
Eigen::MatrixXd transform_eigen(const FrictionKernel& kernel, const ComboProcess& target,
                                Exec exec) {
    const TimeGrid grid = target.grid();
    const int nodes = grid.nodes();
    const int d = kernel.dim();
    if (target.dim() != d) {
        throw DimensionMismatch("target dimension does not match kernel");
    }
    if (d > kStackDim) {
        throw BadDimension("kernel dimension exceeds the solver's stack bound");
    }
    const double dt = grid.dt();
    const double r = kernel.r();
    const Eigen::MatrixXd& vinv = kernel.eigenvectors_inv();

    Eigen::MatrixXd what(nodes, d);
    for (int k = 0; k < nodes; ++k) {
        for (int i = 0; i < d; ++i) {
            what(k, i) = kernel.w_hat(i, grid.t(k));
        }
    }

    const bool stochastic = target.stochastic();
    Eigen::MatrixXd plain(nodes, d);
    std::vector<LeafPlan> leaves;
    if (stochastic) {
        for (const auto& term : target.terms()) {
            if (term.proc->path.dim() > kStackDim) {
                throw BadDimension("process dimension exceeds the solver's stack bound");
            }
            flatten_leaves(term.coef, *term.proc, leaves);
        }
    } else {
        for (int s = 0; s < nodes; ++s) {
            plain.row(s) = (vinv * target.value(s)).transpose();
        }
    }
    const Eigen::MatrixXd& det = target.deterministic_part().values;

    // The grid is uniform, so every decay factor depends on j - k only;
    // tabulating them leaves a multiply-add inner loop.
    Eigen::MatrixXd weight_decay(nodes, d);
    for (int m = 0; m < nodes; ++m) {
        for (int i = 0; i < d; ++i) {
            weight_decay(m, i) = std::exp(-(kernel.sqrt_delta(i) + 0.5 * r) * grid.t(m));
        }
    }
    Eigen::MatrixXd ou_decay(nodes, static_cast<int>(leaves.size()));
    for (std::size_t l = 0; l < leaves.size(); ++l) {
        if (leaves[l].rule == LeafPlan::Rule::ou) {
            for (int m = 0; m < nodes; ++m) {
                ou_decay(m, static_cast<int>(l)) = std::exp(-leaves[l].ou_kappa * grid.t(m));
            }
        }
    }

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(nodes, d);
    par_for(nodes - 1, exec, [&](std::int64_t kk) {
        const int k = static_cast<int>(kk);
        double acc[kStackDim] = {};
        double cm[kStackDim];
        double q[kStackDim];
        for (int j = k; j < nodes; ++j) {
            const int gap = j - k;
            if (stochastic) {
                for (int i = 0; i < d; ++i) cm[i] = det(j, i);
                for (std::size_t l = 0; l < leaves.size(); ++l) {
                    const LeafPlan& leaf = leaves[l];
                    const int ld = static_cast<int>(leaf.coef.cols());
                    double row[kStackDim];
                    if (leaf.rule == LeafPlan::Rule::plug_in) {
                        for (int c = 0; c < ld; ++c) row[c] = (*leaf.path)(j, c);
                    } else if (leaf.rule == LeafPlan::Rule::martingale) {
                        for (int c = 0; c < ld; ++c) row[c] = (*leaf.path)(k, c);
                    } else {
                        const double decay = ou_decay(gap, static_cast<int>(l));
                        for (int c = 0; c < ld; ++c) {
                            row[c] = (1.0 - decay) * leaf.ou_mean(c) +
                                     decay * (*leaf.path)(k, c);
                        }
                    }
                    for (int i = 0; i < d; ++i) {
                        double dot = 0.0;
                        for (int c = 0; c < ld; ++c) dot += leaf.coef(i, c) * row[c];
                        cm[i] += dot;
                    }
                }
                for (int i = 0; i < d; ++i) {
                    double dot = 0.0;
                    for (int c = 0; c < d; ++c) dot += vinv(i, c) * cm[c];
                    q[i] = dot;
                }
            } else {
                for (int i = 0; i < d; ++i) q[i] = plain(j, i);
            }
            const double cj = (j == k || j == nodes - 1) ? 0.5 : 1.0;
            for (int i = 0; i < d; ++i) {
                acc[i] += cj * kernel.eigenvalues()(i) * weight_decay(gap, i) * what(j, i) * q[i];
            }
        }
        for (int i = 0; i < d; ++i) {
            out(k, i) = acc[i] * dt / what(k, i);
        }
    });
    // out.row(nodes-1) stays exactly zero: the window is empty at T.
    return out;
}

}  // namespace

PathGrid target_transform(const FrictionKernel& kernel, const ComboProcess& target, Exec exec) {
    Eigen::MatrixXd eig = transform_eigen(kernel, target, exec);
    return PathGrid(target.grid(), eig * kernel.eigenvectors().transpose());
}

FbsdeSolution solve_linear_fbsde(const FrictionKernel& kernel, const ComboProcess& target,
                                 Exec exec) {
    const TimeGrid grid = target.grid();
    const int nodes = grid.nodes();
    const int d = kernel.dim();
    const double dt = grid.dt();

    Eigen::MatrixXd tp = transform_eigen(kernel, target, exec);

    Eigen::MatrixXd fvals(nodes, d);
    for (int k = 0; k < nodes; ++k) {
        for (int i = 0; i < d; ++i) {
            fvals(k, i) = kernel.F_scalar(i, grid.t(k));
        }
    }

    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(nodes, d);
    Eigen::MatrixXd rate = Eigen::MatrixXd::Zero(nodes, d);
    for (int i = 0; i < d; ++i) {
        double x = 0.0;
        rate(0, i) = tp(0, i);  // phi(0) = 0
        for (int k = 0; k + 1 < nodes; ++k) {
            const double step = std::exp(-0.5 * dt * (fvals(k, i) + fvals(k + 1, i)));
            x = step * (x + 0.5 * dt * tp(k, i)) + 0.5 * dt * tp(k + 1, i);
            phi(k + 1, i) = x;
            rate(k + 1, i) = tp(k + 1, i) - fvals(k + 1, i) * x;
        }
    }
    // rate(T) = 0 exactly: the transform vanishes there and so does F.

    const Eigen::MatrixXd vt = kernel.eigenvectors().transpose();
    FbsdeSolution out;
    out.phi = PathGrid(grid, phi * vt);
    out.rate = PathGrid(grid, rate * vt);
    out.target_transform = PathGrid(grid, tp * vt);
    return out;
}

PathGrid fbsde_residual(const Eigen::MatrixXd& B, double discount_rate, const PathGrid& target,
                        const PathGrid& phi, const PathGrid& rate) {
    require_same_grid(phi, rate);
    require_same_grid(phi, target);
    const TimeGrid grid = phi.grid;
    const double dt = grid.dt();
    PathGrid out(grid, phi.dim());
    for (int k = 1; k + 1 < grid.nodes(); ++k) {
        Eigen::VectorXd ddot = (rate.at(k + 1) - rate.at(k - 1)) / (2.0 * dt);
        Eigen::VectorXd drift = B * (phi.at(k) - target.at(k)) + discount_rate * rate.at(k);
        out.values.row(k) = (ddot - drift).transpose();
    }
    return out;
}

}  // namespace mkteq
