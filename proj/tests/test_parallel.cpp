#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "battery.hpp"
#include "doctest.h"
#include "mkteq/fbsde.hpp"
#include "mkteq/frictional.hpp"

using namespace mkteq;

// The OpenMP kernels write one slot per iteration, so the serial reference
// and the parallel run must agree bitwise, not just to tolerance.

TEST_CASE("par_for covers the range once in both modes") {
    for (Exec mode : {Exec::serial, Exec::openmp}) {
        std::vector<int> hits(1000, 0);
        par_for(1000, mode, [&](std::int64_t i) { hits[i] += 1; });
        for (int h : hits) CHECK(h == 1);
    }
}

TEST_CASE("fbsde solve is bitwise identical across execution modes") {
    battery::Options opt;
    opt.equal_tolerances = true;
    opt.force_noise = true;
    for (std::uint64_t idx : {1, 8, 15}) {
        battery::Scenario sc = battery::make_scenario(idx, opt);
        // include a stochastic exposure so the conditional-mean loop runs
        sc.investors.exposure[0] = ProcessSpec::ou(
            Eigen::VectorXd::Constant(sc.market.num_assets, 1.0),
            Eigen::VectorXd::Zero(sc.market.num_assets), 2.0,
            0.25 * Eigen::MatrixXd::Identity(sc.market.num_assets, sc.market.num_assets));
        Realization real = battery::realize(sc, 120, 9);
        auto serial = frictional::best_response(sc.market, sc.investors, real, 0, Exec::serial);
        auto parallel = frictional::best_response(sc.market, sc.investors, real, 0,
                                                  Exec::openmp);
        CHECK(serial.phi.values == parallel.phi.values);
        CHECK(serial.rate.values == parallel.rate.values);
        CHECK(serial.target_transform.values == parallel.target_transform.values);
    }
}

TEST_CASE("frictional Nash is bitwise identical across execution modes") {
    battery::Options opt;
    opt.equal_tolerances = true;
    opt.force_noise = true;
    battery::Scenario sc = battery::make_scenario(4, opt);
    Realization real = battery::realize(sc, 100);
    auto serial = frictional::nash_equilibrium(sc.market, sc.investors, real, Exec::serial);
    auto parallel = frictional::nash_equilibrium(sc.market, sc.investors, real, Exec::openmp);
    CHECK(serial.returns.values == parallel.returns.values);
    for (std::size_t m = 0; m < serial.demands.size(); ++m) {
        CHECK(serial.demands[m].values == parallel.demands[m].values);
        CHECK(serial.rates[m].values == parallel.rates[m].values);
    }
}
