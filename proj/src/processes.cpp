#include "mkteq/processes.hpp"

#include <cmath>
#include <random>

namespace mkteq {

namespace {

constexpr double kPi = 3.14159265358979323846;

int variant_dim(const ProcessSpec& spec);

struct DimVisitor {
    int operator()(const ConstantSpec& s) const { return static_cast<int>(s.value.size()); }
    int operator()(const DeterministicSpec& s) const { return static_cast<int>(s.coeff.cols()); }
    int operator()(const MartingaleSpec& s) const { return static_cast<int>(s.initial.size()); }
    int operator()(const OuSpec& s) const { return static_cast<int>(s.initial.size()); }
    int operator()(const SumSpec& s) const {
        if (s.terms.empty()) {
            throw BadDimension("sum process needs at least one term");
        }
        const int d = variant_dim(s.terms.front());
        for (const auto& t : s.terms) {
            if (variant_dim(t) != d) {
                throw DimensionMismatch("sum process mixes dimensions");
            }
        }
        return d;
    }
};

int variant_dim(const ProcessSpec& spec) { return std::visit(DimVisitor{}, spec.kind); }

}  // namespace

Eigen::VectorXd DeterministicSpec::value(double t) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(coeff.cols());
    double p = 1.0;
    for (int j = 0; j < coeff.rows(); ++j) {
        out += p * coeff.row(j).transpose();
        p *= t;
    }
    return out;
}

int ProcessSpec::dim() const { return variant_dim(*this); }

bool ProcessSpec::stochastic() const {
    return std::visit(
        [](const auto& s) -> bool {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MartingaleSpec> || std::is_same_v<T, OuSpec>) {
                return true;
            } else if constexpr (std::is_same_v<T, SumSpec>) {
                for (const auto& term : s.terms) {
                    if (term.stochastic()) return true;
                }
                return false;
            } else {
                return false;
            }
        },
        kind);
}

ProcessSpec ProcessSpec::constant(Eigen::VectorXd v) { return {ConstantSpec{std::move(v)}}; }

ProcessSpec ProcessSpec::deterministic(Eigen::MatrixXd coeff) {
    if (coeff.rows() == 0 || coeff.cols() == 0) {
        throw BadDimension("deterministic spec needs coefficients");
    }
    return {DeterministicSpec{std::move(coeff)}};
}

ProcessSpec ProcessSpec::martingale(Eigen::VectorXd initial, Eigen::MatrixXd scale) {
    if (scale.rows() != initial.size() || scale.cols() != initial.size()) {
        throw DimensionMismatch("martingale scale must be d x d");
    }
    return {MartingaleSpec{std::move(initial), std::move(scale)}};
}

ProcessSpec ProcessSpec::ou(Eigen::VectorXd initial, Eigen::VectorXd mean, double reversion,
                            Eigen::MatrixXd scale) {
    if (mean.size() != initial.size() || scale.rows() != initial.size() ||
        scale.cols() != initial.size()) {
        throw DimensionMismatch("OU parameters must share the dimension");
    }
    if (!(reversion > 0.0)) {
        throw BadDimension("OU reversion must be positive");
    }
    return {OuSpec{std::move(initial), std::move(mean), reversion, std::move(scale)}};
}

ProcessSpec ProcessSpec::sum(std::vector<ProcessSpec> terms) {
    ProcessSpec out{SumSpec{std::move(terms)}};
    variant_dim(out);  // validates
    return out;
}

Eigen::MatrixXd brownian_increments(const TimeGrid& grid, int dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    const double sq = std::sqrt(grid.dt());
    Eigen::MatrixXd dw(grid.steps, dim);
    for (int k = 0; k < grid.steps; ++k) {
        for (int i = 0; i < dim; ++i) {
            dw(k, i) = sq * z(gen);
        }
    }
    return dw;
}

RealizedProcess realize(const ProcessSpec& spec, const TimeGrid& grid,
                        const Eigen::MatrixXd& increments) {
    const int d = spec.dim();
    if (spec.stochastic() && (increments.rows() != grid.steps || increments.cols() != d)) {
        throw DimensionMismatch("increments must be (steps) x d");
    }
    RealizedProcess out{spec, PathGrid(grid, d), {}};

    std::visit(
        [&](const auto& s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, ConstantSpec>) {
                out.path.values.rowwise() = s.value.transpose();
            } else if constexpr (std::is_same_v<T, DeterministicSpec>) {
                for (int k = 0; k < grid.nodes(); ++k) {
                    out.path.values.row(k) = s.value(grid.t(k)).transpose();
                }
            } else if constexpr (std::is_same_v<T, MartingaleSpec>) {
                out.path.values.row(0) = s.initial.transpose();
                for (int k = 0; k < grid.steps; ++k) {
                    out.path.values.row(k + 1) =
                        out.path.values.row(k) +
                        (s.scale * increments.row(k).transpose()).transpose();
                }
            } else if constexpr (std::is_same_v<T, OuSpec>) {
                const double dt = grid.dt();
                const double decay = std::exp(-s.reversion * dt);
                // Scales the shared N(0, dt) increment so that the one-step
                // variance matches the exact OU transition law.
                const double var_ratio = -std::expm1(-2.0 * s.reversion * dt) /
                                         (2.0 * s.reversion * dt);
                const double load = std::sqrt(var_ratio);
                out.path.values.row(0) = s.initial.transpose();
                for (int k = 0; k < grid.steps; ++k) {
                    Eigen::VectorXd x = out.path.values.row(k).transpose();
                    Eigen::VectorXd next =
                        s.mean + decay * (x - s.mean) +
                        load * (s.scale * increments.row(k).transpose());
                    out.path.values.row(k + 1) = next.transpose();
                }
            } else if constexpr (std::is_same_v<T, SumSpec>) {
                for (const auto& term : s.terms) {
                    out.parts.push_back(realize(term, grid, increments));
                    out.path.values += out.parts.back().path.values;
                }
            }
        },
        spec.kind);
    if (!out.path.values.allFinite()) {
        throw ModelError("realized path contains non-finite values");
    }
    return out;
}

RealizedProcess realize(const ProcessSpec& spec, const TimeGrid& grid, std::uint64_t seed) {
    if (!spec.stochastic()) {
        return realize(spec, grid, Eigen::MatrixXd());
    }
    return realize(spec, grid, brownian_increments(grid, spec.dim(), seed));
}

RealizedProcess realize(const ProcessSpec& spec, const TimeGrid& grid) {
    if (spec.stochastic()) {
        throw BadSeed("stochastic spec needs a seed or shared increments");
    }
    return realize(spec, grid, Eigen::MatrixXd());
}

namespace {

// Accumulates E[X(t_s)|F(t_t)] into out without temporary allocations for the
// leaf kinds; only nested sums fall back to recursion.
void accumulate_conditional_mean(const RealizedProcess& rp, int t, int s, Eigen::VectorXd& out) {
    std::visit(
        [&](const auto& spec) {
            using T = std::decay_t<decltype(spec)>;
            if constexpr (std::is_same_v<T, ConstantSpec> ||
                          std::is_same_v<T, DeterministicSpec>) {
                out += rp.path.values.row(s).transpose();
            } else if constexpr (std::is_same_v<T, MartingaleSpec>) {
                out += rp.path.values.row(t).transpose();
            } else if constexpr (std::is_same_v<T, OuSpec>) {
                const double gap = rp.path.grid.t(s) - rp.path.grid.t(t);
                const double decay = std::exp(-spec.reversion * gap);
                out += (1.0 - decay) * spec.mean + decay * rp.path.values.row(t).transpose();
            } else {
                for (const auto& part : rp.parts) {
                    accumulate_conditional_mean(part, t, s, out);
                }
            }
        },
        rp.spec.kind);
}

}  // namespace

void conditional_mean_into(const RealizedProcess& rp, int t, int s, Eigen::VectorXd& out) {
    if (s < t) {
        throw TimeOrder("conditional_mean: s must not precede t");
    }
    if (t < 0 || s >= rp.path.grid.nodes()) {
        throw BadIndex("conditional_mean: node out of range");
    }
    out.setZero();
    accumulate_conditional_mean(rp, t, s, out);
}

Eigen::VectorXd conditional_mean(const RealizedProcess& rp, int t, int s) {
    Eigen::VectorXd out(rp.path.dim());
    conditional_mean_into(rp, t, s, out);
    return out;
}

NoiseSpec::NoiseSpec(Form f, int dim, Eigen::MatrixXd coeff, double horizon)
    : form_(f), dim_(dim), coeff_(std::move(coeff)), horizon_(horizon) {}

NoiseSpec NoiseSpec::none(int dim) {
    if (dim < 1) {
        throw BadDimension("noise dimension must be positive");
    }
    return NoiseSpec(Form::none, dim, Eigen::MatrixXd(), 0.0);
}

NoiseSpec NoiseSpec::poly(Eigen::MatrixXd coeff, double horizon) {
    if (coeff.rows() == 0 || coeff.cols() == 0) {
        throw BadDimension("noise poly coefficients are empty");
    }
    if (!(horizon > 0.0)) {
        throw BadDimension("noise horizon must be positive");
    }
    const int dim = static_cast<int>(coeff.cols());
    return NoiseSpec(Form::poly, dim, std::move(coeff), horizon);
}

NoiseSpec NoiseSpec::harmonics(Eigen::MatrixXd coeff, double horizon) {
    if (coeff.rows() == 0 || coeff.cols() == 0) {
        throw BadDimension("noise harmonic coefficients are empty");
    }
    if (!(horizon > 0.0)) {
        throw BadDimension("noise horizon must be positive");
    }
    const int dim = static_cast<int>(coeff.cols());
    return NoiseSpec(Form::harmonics, dim, std::move(coeff), horizon);
}

Eigen::VectorXd NoiseSpec::rate(double t) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    if (form_ == Form::poly) {
        // (T - t) stays factored so the terminal rate is exactly zero.
        double p = 1.0;
        for (int j = 0; j < coeff_.rows(); ++j) {
            out += p * coeff_.row(j).transpose();
            p *= t;
        }
        out *= (horizon_ - t);
    } else if (form_ == Form::harmonics) {
        for (int k = 0; k < coeff_.rows(); ++k) {
            const double arg = (k + 1) * kPi * (horizon_ - t) / horizon_;
            out += std::sin(arg) * coeff_.row(k).transpose();
        }
    }
    return out;
}

Eigen::VectorXd NoiseSpec::rate_drift(double t) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim_);
    if (form_ == Form::poly) {
        // d/dt [(T-t) p(t)] = -p(t) + (T-t) p'(t)
        Eigen::VectorXd p = Eigen::VectorXd::Zero(dim_);
        Eigen::VectorXd dp = Eigen::VectorXd::Zero(dim_);
        double pw = 1.0;
        for (int j = 0; j < coeff_.rows(); ++j) {
            p += pw * coeff_.row(j).transpose();
            if (j + 1 < coeff_.rows()) {
                dp += (j + 1) * pw * coeff_.row(j + 1).transpose();
            }
            pw *= t;
        }
        out = -p + (horizon_ - t) * dp;
    } else if (form_ == Form::harmonics) {
        for (int k = 0; k < coeff_.rows(); ++k) {
            const double omega = (k + 1) * kPi / horizon_;
            const double arg = omega * (horizon_ - t);
            out += -omega * std::cos(arg) * coeff_.row(k).transpose();
        }
    }
    return out;
}

PathGrid NoiseSpec::rate_path(const TimeGrid& grid) const {
    PathGrid out(grid, dim_);
    for (int k = 0; k < grid.nodes(); ++k) {
        out.values.row(k) = rate(grid.t(k)).transpose();
    }
    return out;
}

PathGrid NoiseSpec::rate_drift_path(const TimeGrid& grid) const {
    PathGrid out(grid, dim_);
    for (int k = 0; k < grid.nodes(); ++k) {
        out.values.row(k) = rate_drift(grid.t(k)).transpose();
    }
    return out;
}

PathGrid NoiseSpec::level_path(const TimeGrid& grid) const {
    PathGrid out(grid, dim_);
    if (form_ == Form::none) {
        return out;
    }
    const double dt = grid.dt();
    Eigen::VectorXd prev = rate(grid.t(0));
    for (int k = 1; k < grid.nodes(); ++k) {
        Eigen::VectorXd cur = rate(grid.t(k));
        out.values.row(k) =
            out.values.row(k - 1) + (0.5 * dt) * (prev + cur).transpose();
        prev = cur;
    }
    return out;
}

}  // namespace mkteq
