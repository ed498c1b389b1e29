#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "battery.hpp"
#include "doctest.h"
#include "mkteq/frictional.hpp"
#include "mkteq/frictionless.hpp"
#include "mkteq/oracle.hpp"

using namespace mkteq;
namespace fl = mkteq::frictionless;
namespace fr = mkteq::frictional;

TEST_CASE("pointwise best response reproduces the closed form") {
    for (std::uint64_t idx = 0; idx < 8; ++idx) {
        battery::Scenario sc = battery::make_scenario(idx, {});
        Realization real = battery::realize(sc, 60);
        for (int n = 0; n < sc.investors.count(); n += 2) {
            PathGrid brute = oracle::best_response_pointwise(sc.market, sc.investors, real, n);
            PathGrid closed = fl::best_response_demand(sc.market, sc.investors, real, n);
            CHECK(max_abs_diff(brute, closed) <= 1e-10);
        }
    }
}

TEST_CASE("pointwise best response: zero linear term and quadratic scaling") {
    battery::Options opt;
    opt.deterministic_only = true;
    battery::Scenario sc = battery::make_scenario(3, opt);
    for (auto& e : sc.investors.exposure) {
        e = ProcessSpec::constant(Eigen::VectorXd::Zero(sc.market.num_assets));
    }
    sc.noise = NoiseSpec::none(sc.market.num_assets);
    Realization real = battery::realize(sc, 40);
    PathGrid zero = oracle::best_response_pointwise(sc.market, sc.investors, real, 0);
    CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);

    // doubling the quadratic coefficient halves the maximizer
    Eigen::MatrixXd sigma = sc.market.covariance;
    Eigen::VectorXd rhs = sigma * Eigen::VectorXd::Ones(sc.market.num_assets);
    const double k = 3.7;
    Eigen::VectorXd x1 = (k * sigma).fullPivLu().solve(rhs);
    Eigen::VectorXd x2 = (2.0 * k * sigma).fullPivLu().solve(rhs);
    CHECK((x2 - 0.5 * x1).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("fixed point converges to the Nash returns (hand case)") {
    // d=1, delta=(1,1), Sigma=0.04, zeta=(0,3), psi=0: Nash returns 0.06
    Market market;
    market.num_assets = 1;
    market.covariance = Eigen::MatrixXd::Constant(1, 1, 0.04);
    market.cost = Eigen::MatrixXd::Constant(1, 1, 0.1);
    market.horizon = 1.0;
    Investors inv;
    inv.tolerance = Eigen::VectorXd::Ones(2);
    inv.exposure.push_back(ProcessSpec::constant(Eigen::VectorXd::Zero(1)));
    inv.exposure.push_back(ProcessSpec::constant(Eigen::VectorXd::Constant(1, 3.0)));
    Realization real = realize_scenario(inv, NoiseSpec::none(1), TimeGrid(16, 1.0), 1);

    auto fp = oracle::nash_fixed_point(market, inv, real, 500, 1e-9);
    CHECK(fp.contraction_ratio < 1.0);
    CHECK((fp.nu.values.array() - 0.06).abs().maxCoeff() <= 1e-8);
    CHECK(max_abs_diff(fp.nu, fl::nash_returns(market, inv, real)) <= 1e-8);
}

TEST_CASE("fixed point on an all-zero scenario stops after one iteration") {
    Market market;
    market.num_assets = 1;
    market.covariance = Eigen::MatrixXd::Constant(1, 1, 0.04);
    market.cost = Eigen::MatrixXd::Constant(1, 1, 0.1);
    market.horizon = 1.0;
    Investors inv;
    inv.tolerance = Eigen::VectorXd::Ones(3);
    for (int m = 0; m < 3; ++m) {
        inv.exposure.push_back(ProcessSpec::constant(Eigen::VectorXd::Zero(1)));
    }
    Realization real = realize_scenario(inv, NoiseSpec::none(1), TimeGrid(8, 1.0), 1);
    auto fp = oracle::nash_fixed_point(market, inv, real, 50, 1e-9);
    CHECK(fp.iterations == 1);
    CHECK(fp.nu.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fixed point raises NoConvergence when starved of iterations") {
    battery::Scenario sc = battery::make_scenario(5, {.force_noise = true});
    Realization real = battery::realize(sc, 30);
    CHECK_THROWS_AS(oracle::nash_fixed_point(sc.market, sc.investors, real, 2, 1e-12),
                    NoConvergence);
}

TEST_CASE("both oracle routes agree with the closed form across the battery") {
    for (std::uint64_t idx = 10; idx < 20; ++idx) {
        battery::Scenario sc = battery::make_scenario(idx, {});
        Realization real = battery::realize(sc, 50);
        PathGrid closed = fl::nash_returns(sc.market, sc.investors, real);
        auto fp = oracle::nash_fixed_point(sc.market, sc.investors, real, 2000, 1e-9);
        CHECK(max_abs_diff(fp.nu, closed) <= 1e-8);
        PathGrid pointwise = oracle::nash_pointwise(sc.market, sc.investors, real);
        CHECK(max_abs_diff(pointwise, closed) <= 1e-10);
        CHECK(max_abs_diff(pointwise, fp.nu) <= 1e-8);

        auto gs = oracle::nash_fixed_point(sc.market, sc.investors, real, 2000, 1e-9,
                                           oracle::IterationStyle::gauss_seidel);
        CHECK(max_abs_diff(gs.nu, closed) <= 1e-8);
    }
}

TEST_CASE("decoupled Nash demands coincide with the fixed point's implied demands") {
    battery::Options opt;
    opt.fixed_investors = 2;
    battery::Scenario sc = battery::make_scenario(23, opt);
    sc.investors.tolerance(1) = sc.investors.tolerance(0);  // equal-delta example
    Realization real = battery::realize(sc, 60);
    PathGrid nu = fl::nash_returns(sc.market, sc.investors, real);
    auto fp = oracle::nash_fixed_point(sc.market, sc.investors, real, 2000, 1e-9);
    auto demands = fl::nash_demands(sc.market, sc.investors, real, nu);
    auto demands_fp = fl::nash_demands(sc.market, sc.investors, real, fp.nu);
    CHECK(max_abs_diff(demands[0], demands_fp[0]) <= 1e-8);
    CHECK(max_abs_diff(demands[1], demands_fp[1]) <= 1e-8);
}

TEST_CASE("QP oracle: zero target gives the zero path") {
    Market market;
    market.num_assets = 2;
    market.covariance = 0.05 * Eigen::MatrixXd::Identity(2, 2);
    market.cost = Eigen::MatrixXd(Eigen::Vector2d(0.1, 0.2).asDiagonal());
    market.discount_rate = 0.03;
    market.horizon = 1.0;
    TimeGrid grid(50, 1.0);
    PathGrid ell(grid, 2);
    auto problem = oracle::assemble_lq(grid, ell, market.covariance, market.cost, 0.03, "zero");
    auto sol = oracle::solve_lq(problem);
    CHECK(sol.phi.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.terminal_rate == 0.0);
}

TEST_CASE("QP oracle tracks the explicit best response and refines") {
    battery::Options opt;
    opt.equal_tolerances = true;
    opt.deterministic_only = true;
    opt.force_noise = true;
    for (std::uint64_t idx : {2, 9}) {
        battery::Scenario sc = battery::make_scenario(idx, opt);
        double err_100 = 0.0, err_200 = 0.0, err_400 = 0.0;
        for (int steps : {100, 200, 400}) {
            Realization real = battery::realize(sc, steps);
            auto qp = oracle::frictional_qp(sc.market, sc.investors, real, 0);
            auto ex = fr::best_response(sc.market, sc.investors, real, 0, Exec::serial);
            const double scale = std::max(ex.phi.max_abs(), 1e-12);
            const double err = max_abs_diff(qp.phi, ex.phi) / scale;
            if (steps == 100) err_100 = err;
            if (steps == 200) err_200 = err;
            if (steps == 400) err_400 = err;
        }
        CHECK(err_200 <= 0.02);
        CHECK(std::log2(err_100 / err_400) / 2.0 >= 0.9);
    }
}

TEST_CASE("QP oracle on the constant-target profile stays within two percent") {
    // r = 0, constant exposures: the explicit solution integrates the
    // tanh-shaped transform; the QP must land on the same profile.
    Market market;
    market.num_assets = 1;
    market.covariance = Eigen::MatrixXd::Constant(1, 1, 0.04);
    market.cost = Eigen::MatrixXd::Constant(1, 1, 0.1);
    market.discount_rate = 0.0;
    market.horizon = 1.0;
    Investors inv;
    inv.tolerance = Eigen::VectorXd::Ones(2);
    inv.exposure.push_back(ProcessSpec::constant(Eigen::VectorXd::Zero(1)));
    inv.exposure.push_back(ProcessSpec::constant(Eigen::VectorXd::Constant(1, 3.0)));
    Realization real = realize_scenario(inv, NoiseSpec::none(1), TimeGrid(200, 1.0), 1);
    auto qp = oracle::frictional_qp(market, inv, real, 0);
    auto ex = fr::best_response(market, inv, real, 0, Exec::serial);
    CHECK(max_abs_diff(qp.phi, ex.phi) / ex.phi.max_abs() <= 0.02);
    CHECK(qp.terminal_rate <= 10.0 * real.grid.dt() * ex.phi.max_abs());
}

TEST_CASE("QP oracle rejects stochastic scenarios and singular blocks") {
    battery::Options opt;
    opt.equal_tolerances = true;
    battery::Scenario sc = battery::make_scenario(6, opt);
    sc.investors.exposure[0] = ProcessSpec::martingale(
        Eigen::VectorXd::Zero(sc.market.num_assets),
        Eigen::MatrixXd::Identity(sc.market.num_assets, sc.market.num_assets));
    Realization real = battery::realize(sc, 30);
    CHECK_THROWS_AS(oracle::frictional_qp(sc.market, sc.investors, real, 0), ModelError);

    TimeGrid grid(10, 1.0);
    PathGrid ell(grid, 1);
    auto problem = oracle::assemble_lq(grid, ell, Eigen::MatrixXd::Constant(1, 1, 0.04),
                                       Eigen::MatrixXd::Constant(1, 1, 0.1), 0.0, "corrupt");
    problem.diag[0].setZero();
    CHECK_THROWS_AS(oracle::solve_lq(problem), SingularKkt);
}

TEST_CASE("verify_clearing reports violations faithfully") {
    battery::Scenario sc = battery::make_scenario(33, {});
    Realization real = battery::realize(sc, 40);
    auto res = fl::nash_equilibrium(sc.market, sc.investors, real);
    auto ok = oracle::verify_clearing(res, real, 1e-8);
    CHECK(ok.pass);

    // zeroing one investor's demand shows up as exactly its own size
    EquilibriumResult broken = res;
    const double size = broken.demands[0].values.cwiseAbs().maxCoeff();
    broken.demands[0].values.setZero();
    auto bad = oracle::verify_clearing(broken, real, 1e-8);
    CHECK_FALSE(bad.pass);
    CHECK(bad.max_demand_violation == doctest::Approx(size).epsilon(1e-9));

    // a noise bump of epsilon violates clearing by exactly epsilon
    Realization bumped = real;
    bumped.psi.values.array() += 1e-4;
    auto eps = oracle::verify_clearing(res, bumped, 1e-8);
    CHECK(eps.max_demand_violation == doctest::Approx(1e-4).epsilon(1e-6));
}
