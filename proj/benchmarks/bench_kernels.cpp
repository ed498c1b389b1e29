// Serial vs OpenMP timings for the two heavy kernels: the conditional-mean
// target transform inside the FBSDE solver, and Monte Carlo scenario
// realization. Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include "mkteq/fbsde.hpp"
#include "mkteq/frictional.hpp"
#include "mkteq/market.hpp"

namespace {

struct Fixture {
    mkteq::Market market;
    mkteq::Investors investors;
    mkteq::NoiseSpec noise = mkteq::NoiseSpec::none(1);
    mkteq::TimeGrid grid;
    mkteq::Realization real;

    Fixture(int d, int steps) : grid(steps, 1.0) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Random(d, d);
        market.num_assets = d;
        market.covariance = a * a.transpose() + 0.05 * Eigen::MatrixXd::Identity(d, d);
        market.cost = Eigen::MatrixXd(Eigen::VectorXd::Constant(d, 0.1).asDiagonal());
        market.discount_rate = 0.02;
        market.horizon = 1.0;

        investors.tolerance = Eigen::VectorXd::Ones(4);
        for (int m = 0; m < 4; ++m) {
            investors.exposure.push_back(mkteq::ProcessSpec::ou(
                Eigen::VectorXd::Constant(d, 1.0 + m), Eigen::VectorXd::Zero(d), 1.5,
                0.2 * Eigen::MatrixXd::Identity(d, d)));
        }
        noise = mkteq::NoiseSpec::poly(Eigen::MatrixXd::Constant(2, d, 0.3), 1.0);
        real = mkteq::realize_scenario(investors, noise, grid, 7);
    }
};

void bench_fbsde(benchmark::State& state, mkteq::Exec exec) {
    Fixture fx(3, static_cast<int>(state.range(0)));
    mkteq::FrictionKernel kernel = mkteq::build_kernel(fx.market, 1.0);
    mkteq::ComboProcess target = mkteq::frictional::tracking_combo(fx.market, fx.investors,
                                                                   fx.real, 0);
    for (auto _ : state) {
        auto sol = mkteq::solve_linear_fbsde(kernel, target, exec);
        benchmark::DoNotOptimize(sol.phi.values.data());
    }
}

void bench_nash(benchmark::State& state, mkteq::Exec exec) {
    Fixture fx(3, static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto res = mkteq::frictional::nash_equilibrium(fx.market, fx.investors, fx.real, exec);
        benchmark::DoNotOptimize(res.returns.values.data());
    }
}

void bench_realize(benchmark::State& state, mkteq::Exec exec) {
    Fixture fx(3, 400);
    const int paths = static_cast<int>(state.range(0));
    std::vector<mkteq::Realization> out(paths);
    for (auto _ : state) {
        mkteq::par_for(paths, exec, [&](std::int64_t p) {
            out[p] = mkteq::realize_scenario(fx.investors, fx.noise, fx.grid,
                                             static_cast<std::uint64_t>(p));
        });
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK_CAPTURE(bench_fbsde, serial, mkteq::Exec::serial)->Arg(200)->Arg(400);
BENCHMARK_CAPTURE(bench_fbsde, openmp, mkteq::Exec::openmp)->Arg(200)->Arg(400);
BENCHMARK_CAPTURE(bench_nash, serial, mkteq::Exec::serial)->Arg(400);
BENCHMARK_CAPTURE(bench_nash, openmp, mkteq::Exec::openmp)->Arg(400);
BENCHMARK_CAPTURE(bench_realize, serial, mkteq::Exec::serial)->Arg(64);
BENCHMARK_CAPTURE(bench_realize, openmp, mkteq::Exec::openmp)->Arg(64);

BENCHMARK_MAIN();
