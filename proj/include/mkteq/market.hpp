#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mkteq/grid.hpp"
#include "mkteq/processes.hpp"

namespace mkteq {

// Market primitives: d risky assets with covariance Sigma, diagonal quadratic
// trading cost Lambda, discount rate r and horizon T.
struct Market {
    int num_assets = 1;
    Eigen::MatrixXd covariance;  // Sigma, symmetric positive definite
    Eigen::MatrixXd cost;        // Lambda, diagonal with positive entries
    double discount_rate = 0.0;  // r >= 0
    double horizon = 1.0;        // T > 0
};

struct Investors {
    Eigen::VectorXd tolerance;          // delta_m > 0
    std::vector<ProcessSpec> exposure;  // zeta_m

    int count() const { return static_cast<int>(tolerance.size()); }
};

// Aggregate tolerance delta, relative tolerances lambda_m = delta_m / delta
// and the summed exposure process.
struct Aggregates {
    double delta = 0.0;
    Eigen::VectorXd lambda;
    ProcessSpec zeta;

    double delta_minus(int m) const { return delta - delta * lambda(m); }
    double lambda_minus(int m) const { return 1.0 - lambda(m); }
};

Aggregates aggregate(const Investors& investors);

// 1 - sum lambda_m^2 computed as sum lambda_m (1 - lambda_m); all terms
// positive, so no cancellation even for very skewed tolerances.
double one_minus_sum_lambda_sq(const Eigen::VectorXd& lambda);

bool equal_tolerances(const Investors& investors, double rel_tol = 1e-12);

enum class Regime {
    frictionless_competitive,
    frictionless_nash,
    frictional_best_response,
    frictional_nash,
    frictional_nash_two_investor,
};

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& name);
bool regime_is_frictional(Regime r);

struct EquilibriumResult {
    Regime regime;
    PathGrid returns;                // nu
    std::vector<PathGrid> demands;   // phi_m
    std::vector<PathGrid> rates;     // phi_dot_m; empty in frictionless regimes
};

// One realized scenario path: all exposures drawn off a shared Brownian
// driver, noise evaluated in closed form.
struct Realization {
    TimeGrid grid;
    std::vector<RealizedProcess> zeta;
    PathGrid zeta_sum;
    PathGrid psi;
    PathGrid psi_dot;
    PathGrid psi_drift;  // a^{psi_dot}

    bool stochastic() const;
};

Realization realize_scenario(const Investors& investors, const NoiseSpec& noise,
                             const TimeGrid& grid, std::uint64_t seed);

struct ValidationReport {
    double covariance_symmetry_gap = 0.0;
    double covariance_min_eigenvalue = 0.0;
    double cost_min_diagonal = 0.0;
    double cost_max_offdiagonal = 0.0;
    double noise_terminal_rate = 0.0;
    bool frictional_checked = false;
};

// Checks the standing assumptions, throws on the first violation. When a
// frictional regime is requested the noise rate must vanish at T.
ValidationReport validate_market(const Market& market, const Investors& investors,
                                 const NoiseSpec& noise, bool frictional_requested);

}  // namespace mkteq
