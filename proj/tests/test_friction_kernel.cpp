#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "mkteq/friction_kernel.hpp"

using namespace mkteq;

namespace {

Market scalar_market(double sigma, double lambda, double r, double T) {
    Market m;
    m.num_assets = 1;
    m.covariance = Eigen::MatrixXd::Constant(1, 1, sigma);
    m.cost = Eigen::MatrixXd::Constant(1, 1, lambda);
    m.discount_rate = r;
    m.horizon = T;
    return m;
}

Market random_market(std::uint64_t seed, int d, double r) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) a(i, j) = unif(gen) - 0.5;
    }
    Market m;
    m.num_assets = d;
    m.covariance = a * a.transpose() + 0.3 * d * Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd cost(d);
    for (int i = 0; i < d; ++i) cost(i) = unif(gen);
    m.cost = Eigen::MatrixXd(cost.asDiagonal());
    m.discount_rate = r;
    m.horizon = 1.0 + unif(gen);
    return m;
}

}  // namespace

TEST_CASE("scalar kernel: B, Delta and sqrt(Delta) hand values") {
    FrictionKernel k = build_kernel(scalar_market(0.04, 0.1, 0.0, 1.0), 1.0);
    CHECK(k.B()(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(k.Delta()(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(k.sqrt_delta(0) == doctest::Approx(0.4472135954999579).epsilon(1e-14));
}

TEST_CASE("zero discount: F(t) reduces to sqrt(Delta) tanh(sqrt(Delta)(T-t))") {
    FrictionKernel k = build_kernel(scalar_market(0.04, 0.1, 0.0, 1.0), 1.0);
    const double sd = k.sqrt_delta(0);
    for (double t : {0.0, 0.25, 0.5, 0.75, 0.97}) {
        CHECK(k.F(t)(0, 0) == doctest::Approx(sd * std::tanh(sd * (1.0 - t))).epsilon(1e-12));
    }
}

TEST_CASE("terminal boundary: G(T)=I, G_dot(T)=0, F(T)=0 exactly") {
    Market m = random_market(5, 3, 0.07);
    FrictionKernel k = build_kernel(m, 1.3);
    CHECK((k.G(m.horizon) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(k.G_dot(m.horizon).cwiseAbs().maxCoeff() == 0.0);
    CHECK(k.F(m.horizon).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectral matrix functions match the 30-term power series") {
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int d = 1; d <= 4; ++d) {
        Market m = random_market(100 + d, d, unif(gen) < 0.5 ? 0.0 : 0.05);
        FrictionKernel k = build_kernel(m, 0.8);
        Eigen::MatrixXd delta = k.Delta();
        for (int trial = 0; trial < 3; ++trial) {
            const double t = unif(gen) * m.horizon;
            const double tau = m.horizon - t;
            CHECK((k.G(t) - cosh_sqrt_series(delta, tau)).cwiseAbs().maxCoeff() <= 1e-10);
            CHECK((-k.G_dot(t) - sqrt_sinh_sqrt_series(delta, tau)).cwiseAbs().maxCoeff() <=
                  1e-10);
        }
    }
}

TEST_CASE("eigendecomposition reconstructs B with positive spectrum") {
    Market m = random_market(42, 4, 0.03);
    FrictionKernel k = build_kernel(m, 2.0);
    CHECK(k.eigenvalues().minCoeff() > 0.0);
    Eigen::MatrixXd recon =
        k.eigenvectors() * k.eigenvalues().asDiagonal() * k.eigenvectors_inv();
    CHECK((recon - k.B()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("the F family commutes") {
    Market m = random_market(9, 3, 0.08);
    FrictionKernel k = build_kernel(m, 1.0);
    for (double t : {0.1, 0.6}) {
        for (double s : {0.3, 0.9}) {
            Eigen::MatrixXd ab = k.F(t) * k.F(s);
            Eigen::MatrixXd ba = k.F(s) * k.F(t);
            CHECK((ab - ba).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("w_hat matches the direct formula away from overflow") {
    Market m = random_market(12, 2, 0.06);
    FrictionKernel k = build_kernel(m, 0.9);
    for (int i = 0; i < 2; ++i) {
        for (double t : {0.2, 0.8, m.horizon}) {
            const double delta = k.eigenvalues()(i) + 0.25 * m.discount_rate * m.discount_rate;
            const double direct = delta * k.g(i, t) - 0.5 * m.discount_rate * k.g_dot(i, t);
            const double via_hat =
                std::exp(k.sqrt_delta(i) * (m.horizon - t)) * k.w_hat(i, t);
            CHECK(via_hat == doctest::Approx(direct).epsilon(1e-12));
        }
    }
}

TEST_CASE("kernel rejects bad inputs") {
    Market m = scalar_market(0.04, 0.1, 0.0, 1.0);
    CHECK_THROWS_AS(build_kernel(m, 0.0), BadDimension);
    m.cost(0, 0) = -0.1;
    CHECK_THROWS_AS(build_kernel(m, 1.0), NonDiagonalCost);
}
