#pragma once

// Randomized scenario generator shared by the oracle cross-check tests and
// the acceptance suite. Everything is seeded from the scenario index, so a
// battery is reproducible run to run.

#include <random>

#include "mkteq/market.hpp"

namespace battery {

struct Scenario {
    mkteq::Market market;
    mkteq::Investors investors;
    mkteq::NoiseSpec noise = mkteq::NoiseSpec::none(1);
    bool deterministic = true;
};

struct Options {
    bool equal_tolerances = false;
    bool deterministic_only = false;
    bool force_noise = false;
    int max_investors = 6;
    int fixed_investors = 0;  // 0 = random in [2, max_investors]
};

inline Scenario make_scenario(std::uint64_t index, const Options& opt = {}) {
    std::mt19937_64 gen(0x9E3779B97F4A7C15ull ^ (index * 0xBF58476D1CE4E5B9ull + 0x2545F4914F6CDD1Dull));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto in_range = [&](double lo, double hi) { return lo + unif(gen) * (hi - lo); };
    auto pick_int = [&](int lo, int hi) {
        return lo + static_cast<int>(unif(gen) * (hi - lo + 0.999999));
    };

    Scenario s;
    const int d = pick_int(1, 3);
    const int n = opt.fixed_investors > 0 ? opt.fixed_investors : pick_int(2, opt.max_investors);

    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            a(i, j) = in_range(-1.0, 1.0);
        }
    }
    const double vol = in_range(0.1, 0.4);
    s.market.num_assets = d;
    s.market.covariance =
        vol * vol * (a * a.transpose() + 0.4 * d * Eigen::MatrixXd::Identity(d, d));
    Eigen::VectorXd cost(d);
    for (int i = 0; i < d; ++i) {
        cost(i) = in_range(0.05, 0.5);
    }
    s.market.cost = Eigen::MatrixXd(cost.asDiagonal());
    s.market.discount_rate = unif(gen) < 0.5 ? 0.0 : in_range(0.01, 0.1);
    s.market.horizon = in_range(0.5, 1.5);

    s.investors.tolerance.resize(n);
    const double base = in_range(0.5, 2.0);
    for (int m = 0; m < n; ++m) {
        s.investors.tolerance(m) = opt.equal_tolerances ? base : in_range(0.5, 2.0);
    }

    for (int m = 0; m < n; ++m) {
        const int kind = pick_int(0, opt.deterministic_only ? 1 : 2);
        if (kind == 0) {
            Eigen::VectorXd v(d);
            for (int i = 0; i < d; ++i) v(i) = in_range(-2.0, 2.0);
            s.investors.exposure.push_back(mkteq::ProcessSpec::constant(v));
        } else if (kind == 1) {
            Eigen::MatrixXd coeff(pick_int(2, 3), d);
            for (int r = 0; r < coeff.rows(); ++r) {
                for (int c = 0; c < d; ++c) {
                    coeff(r, c) = in_range(-1.0, 1.0);
                }
            }
            s.investors.exposure.push_back(mkteq::ProcessSpec::deterministic(coeff));
        } else {
            Eigen::VectorXd x0(d), theta(d);
            for (int i = 0; i < d; ++i) {
                x0(i) = in_range(-1.5, 1.5);
                theta(i) = in_range(-1.0, 1.0);
            }
            s.investors.exposure.push_back(mkteq::ProcessSpec::ou(
                x0, theta, in_range(0.5, 3.0),
                in_range(0.1, 0.4) * Eigen::MatrixXd::Identity(d, d)));
            s.deterministic = false;
        }
    }

    if (opt.force_noise || unif(gen) < 0.8) {
        Eigen::MatrixXd coeff(pick_int(1, 3), d);
        for (int r = 0; r < coeff.rows(); ++r) {
            for (int c = 0; c < d; ++c) {
                coeff(r, c) = in_range(-0.5, 0.5);
            }
        }
        s.noise = mkteq::NoiseSpec::poly(coeff, s.market.horizon);
    } else {
        s.noise = mkteq::NoiseSpec::none(d);
    }
    return s;
}

inline mkteq::Realization realize(const Scenario& s, int steps, std::uint64_t seed = 11) {
    return mkteq::realize_scenario(s.investors, s.noise, mkteq::TimeGrid(steps, s.market.horizon),
                                   seed);
}

}  // namespace battery
