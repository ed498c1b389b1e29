#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mkteq/grid.hpp"

namespace mkteq {

// Process classes for risk exposures. Each class evaluates on a grid and has
// a closed-form conditional expectation, which is what the frictional
// tracking formulas consume:
//   constant / deterministic  E[X(s)|F(t)] = X(s)
//   martingale                E[X(s)|F(t)] = X(t)
//   OU                        E[X(s)|F(t)] = theta + e^{-kappa (s-t)} (X(t) - theta)
// Sums evaluate term by term.

struct ConstantSpec {
    Eigen::VectorXd value;
};

// Polynomial in t, one column per asset: value_i(t) = sum_j coeff(j, i) t^j.
struct DeterministicSpec {
    Eigen::MatrixXd coeff;
    Eigen::VectorXd value(double t) const;
};

struct MartingaleSpec {
    Eigen::VectorXd initial;
    Eigen::MatrixXd scale;  // d x d diffusion loading on the shared driver
};

struct OuSpec {
    Eigen::VectorXd initial;
    Eigen::VectorXd mean;     // theta
    double reversion = 1.0;   // kappa > 0
    Eigen::MatrixXd scale;
};

struct ProcessSpec;

struct SumSpec {
    std::vector<ProcessSpec> terms;
};

struct ProcessSpec {
    std::variant<ConstantSpec, DeterministicSpec, MartingaleSpec, OuSpec, SumSpec> kind;

    int dim() const;
    bool stochastic() const;

    static ProcessSpec constant(Eigen::VectorXd v);
    static ProcessSpec deterministic(Eigen::MatrixXd coeff);
    static ProcessSpec martingale(Eigen::VectorXd initial, Eigen::MatrixXd scale);
    static ProcessSpec ou(Eigen::VectorXd initial, Eigen::VectorXd mean, double reversion,
                          Eigen::MatrixXd scale);
    static ProcessSpec sum(std::vector<ProcessSpec> terms);
};

// Brownian increments shared by all stochastic specs of one scenario path;
// row k holds W(t_{k+1}) - W(t_k) ~ N(0, dt I_d). Exposures correlate only
// through their scale matrices, mirroring the single d-dimensional driver of
// the market.
Eigen::MatrixXd brownian_increments(const TimeGrid& grid, int dim, std::uint64_t seed);

// A spec together with its realized path. Sum keeps the realized parts so
// conditional expectations can be evaluated term by term.
struct RealizedProcess {
    ProcessSpec spec;
    PathGrid path;
    std::vector<RealizedProcess> parts;
};

RealizedProcess realize(const ProcessSpec& spec, const TimeGrid& grid,
                        const Eigen::MatrixXd& increments);
RealizedProcess realize(const ProcessSpec& spec, const TimeGrid& grid, std::uint64_t seed);
// Deterministic kinds only; throws BadSeed if the spec has a stochastic part.
RealizedProcess realize(const ProcessSpec& spec, const TimeGrid& grid);

// E[X(t_s) | F(t_t)] for s >= t under the class rule.
Eigen::VectorXd conditional_mean(const RealizedProcess& rp, int t, int s);

// Same, written into a preallocated vector; the hot path of the tracking
// transform, which calls this once per (t, s) pair.
void conditional_mean_into(const RealizedProcess& rp, int t, int s, Eigen::VectorXd& out);

// Noise-trader demand psi: psi(0) = 0, d psi = psi_dot dt, with an absolutely
// continuous rate vanishing at T. Both admissible forms keep psi_dot(T) = 0
// exactly by construction:
//   poly:      psi_dot_i(t) = (T - t) * sum_j c(j,i) t^j
//   harmonics: psi_dot_i(t) = sum_k c(k,i) sin((k+1) pi (T - t) / T)
class NoiseSpec {
  public:
    enum class Form { none, poly, harmonics };

    static NoiseSpec none(int dim);
    static NoiseSpec poly(Eigen::MatrixXd coeff, double horizon);
    static NoiseSpec harmonics(Eigen::MatrixXd coeff, double horizon);

    Form form() const { return form_; }
    int dim() const { return dim_; }
    double horizon() const { return horizon_; }
    const Eigen::MatrixXd& coefficients() const { return coeff_; }
    bool is_zero() const { return form_ == Form::none; }

    Eigen::VectorXd rate(double t) const;        // psi_dot
    Eigen::VectorXd rate_drift(double t) const;  // a^{psi_dot}

    PathGrid rate_path(const TimeGrid& grid) const;
    PathGrid rate_drift_path(const TimeGrid& grid) const;
    // psi by trapezoid integration of the rate; psi(0) = 0 exactly.
    PathGrid level_path(const TimeGrid& grid) const;

  private:
    NoiseSpec(Form f, int dim, Eigen::MatrixXd coeff, double horizon);

    Form form_;
    int dim_;
    Eigen::MatrixXd coeff_;
    double horizon_;
};

}  // namespace mkteq
