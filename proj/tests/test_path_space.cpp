#include <doctest.h>

#include <cmath>
#include <vector>

#include "mildgirsanov/path_space.hpp"

using namespace mg;

namespace {

// Closed-form integrals for one step of length dt: int e^{-2 lambda s} ds and int e^{-lambda s} ds.
double var_eta(double lambda, double dt) { return -std::expm1(-2.0 * lambda * dt) / (2.0 * lambda); }
double cov_eta(double lambda, double dt) { return -std::expm1(-lambda * dt) / lambda; }

}  // namespace

TEST_CASE("time grid") {
    const TimeGrid g(1.0, 4);
    CHECK(g.nodes() == 5);
    CHECK(g.dt() == 0.25);
    CHECK(g.node(4) == 1.0);
    const TimeGrid w(8.0, 16, -8.0);
    CHECK(w.node(0) == -8.0);
    CHECK(w.node(16) == 0.0);
    CHECK_THROWS_AS(TimeGrid(0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(1.0, 1), std::invalid_argument);
}

TEST_CASE("pair covariance for lambda = 1, dt = 0.1") {
    const auto p = pair_steps(OperatorSpec({1.0}, 0.25, 0.0), 0.1)[0];
    CHECK(p.var_eta == doctest::Approx(0.090635).epsilon(1e-5));
    CHECK(p.cov == doctest::Approx(0.095163).epsilon(1e-5));
    CHECK(p.decay == doctest::Approx(std::exp(-0.1)));
    CHECK(p.db_scale == doctest::Approx(std::sqrt(0.1)));
    // The Cholesky factors reproduce the covariance.
    CHECK(p.eta_from_first * p.db_scale == doctest::Approx(p.cov));
    CHECK(p.eta_from_first * p.eta_from_first + p.eta_from_second * p.eta_from_second ==
          doctest::Approx(p.var_eta));
}

TEST_CASE("pair covariance stays PSD in the series regime") {
    for (double lambda : {1e-9, 1e-6, 1e-3, 1.0, 1e4}) {
        const double dt = 1e-3;
        const auto p = pair_steps(OperatorSpec({lambda}, 0.25, 0.0), dt)[0];
        CHECK(p.var_eta == doctest::Approx(var_eta(lambda, dt)).epsilon(1e-10));
        CHECK(p.cov == doctest::Approx(cov_eta(lambda, dt)).epsilon(1e-10));
        CHECK(p.eta_from_second >= 0.0);
        CHECK(std::isfinite(p.eta_from_second));
    }
    CHECK(phi1(0.0) == 1.0);
    CHECK(phi1(1e-12) == doctest::Approx(1.0));
    CHECK(phi1(1.0) == doctest::Approx(1.0 - std::exp(-1.0)));
}

TEST_CASE("zero noise gives the zero path") {
    const OperatorSpec spec = OperatorSpec::laplacian(3);
    const TimeGrid grid(1.0, 16);
    const std::vector<double> zeros(normals_per_path(spec, grid), 0.0);
    CHECK(normals_per_path(spec, grid) == 2 * 3 * 16);
    const GaussianPathSample s = sample_convolution(spec, grid, zeros);
    for (double v : s.h.flat()) CHECK(v == 0.0);
    for (double v : s.db.flat()) CHECK(v == 0.0);
    CHECK_THROWS_AS(sample_convolution(spec, grid, std::span<const double>(zeros).first(5)), std::invalid_argument);
}

TEST_CASE("sampler is reproducible per (seed, index)") {
    const OperatorSpec spec = OperatorSpec::laplacian(4);
    const TimeGrid grid(1.0, 32);
    const auto a = sample_convolution(spec, grid, 11, 3);
    const auto b = sample_convolution(spec, grid, 11, 3);
    const auto c = sample_convolution(spec, grid, 11, 4);
    CHECK(a.h == b.h);
    CHECK(a.db == b.db);
    CHECK_FALSE(a.h == c.h);
}

TEST_CASE("terminal marginal of the stochastic convolution") {
    // d = 1, lambda = 1, T = 1: Var h(T) = (1 - e^{-2}) / 2 = 0.432332, exact at any N.
    const OperatorSpec spec({1.0}, 0.25, 0.0);
    const TimeGrid grid(1.0, 8);
    const std::size_t m = 100000;
    double s1 = 0, s2 = 0, s4 = 0, b2 = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto s = sample_convolution(spec, grid, 99, i);
        const double h = s.h(0, 8);
        s1 += h;
        s2 += h * h;
        s4 += h * h * h * h;
        double bt = 0;
        for (std::size_t k = 0; k < 8; ++k) bt += s.db(0, k);
        b2 += bt * bt;
    }
    const double var = s2 / m - (s1 / m) * (s1 / m);
    const double se = std::sqrt((s4 / m - (s2 / m) * (s2 / m)) / m);
    const double exact = (1.0 - std::exp(-2.0)) / 2.0;
    CHECK(exact == doctest::Approx(0.432332).epsilon(1e-6));
    CHECK(std::abs(var - exact) < 3.0 * se);
    // Brownian increments add up to B(T) with variance T.
    CHECK(std::abs(b2 / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
}

TEST_CASE("colored noise scales the marginal by lambda^{-epsilon}") {
    const OperatorSpec spec({4.0}, 0.25, 0.5);
    const TimeGrid grid(1.0, 4);
    const std::size_t m = 50000;
    double s2 = 0, s4 = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double h = sample_convolution(spec, grid, 5, i).h(0, 4);
        s2 += h * h;
        s4 += h * h * h * h;
    }
    const double exact = std::pow(4.0, -0.5) * (1.0 - std::exp(-8.0)) / 8.0;
    const double se = std::sqrt((s4 / m - (s2 / m) * (s2 / m)) / m);
    CHECK(std::abs(s2 / m - exact) < 3.0 * se);
}

TEST_CASE("kernel evaluation") {
    const CovarianceKernel k(OperatorSpec({1.0}, 0.25, 0.0));
    CHECK(kernel_eval(k, 0.0, 0.7)[0] == 0.0);
    CHECK(kernel_eval(k, 0.7, 0.0)[0] == 0.0);
    CHECK(kernel_eval(k, 1.0, 1.0)[0] == doctest::Approx(0.432332).epsilon(1e-6));
    const CovarianceKernel k3(OperatorSpec({1.0, 4.0, 9.0}, 0.25, 0.5));
    for (std::size_t j = 0; j < 3; ++j) {
        const double lambda = k3.spec().eigenvalue(j);
        const double t = 0.8, s = 0.3;
        const double direct = std::pow(lambda, -0.5) *
                              (std::exp(-lambda * (t - s)) - std::exp(-lambda * (t + s))) / (2.0 * lambda);
        CHECK(k3.mode(j, t, s) == doctest::Approx(direct).epsilon(1e-13));
        CHECK(k3.mode(j, t, s) == k3.mode(j, s, t));
    }
    CHECK(convolution_variance(OperatorSpec({1.0}, 0.25, 0.0), 0, 1.0) == doctest::Approx(0.432332).epsilon(1e-6));
}

TEST_CASE("empirical covariance on d = 2, lambda = (1, 4), N = 64") {
    const OperatorSpec spec({1.0, 4.0}, 0.25, 0.0);
    const TimeGrid grid(1.0, 64);
    const std::vector<std::size_t> nodes{11, 21, 32, 43, 53, 64};
    const CovarianceReport r = empirical_covariance_check(spec, grid, nodes, {200000, 20261018, 1});
    CHECK(r.entries.size() >= 2 * 21);
    CHECK(r.max_z < 4.0);
    CHECK(r.max_cross_mode_z < 4.0);
}

TEST_CASE("reconstructed increments approximate the stored ones") {
    const OperatorSpec spec({1.0}, 0.25, 0.0);
    const TimeGrid grid(1.0, 256);
    double diff = 0.0;
    for (std::size_t i = 0; i < 200; ++i) {
        const auto s = sample_convolution(spec, grid, 3, i);
        const ModeArray r = reconstruct_increments(spec, grid, s.h);
        for (std::size_t k = 0; k < grid.steps(); ++k) diff += std::pow(r(0, k) - s.db(0, k), 2);
    }
    diff /= 200.0 * 256.0;
    CHECK(diff / grid.dt() < 1e-3);
}

TEST_CASE("precision residual") {
    const OperatorSpec spec({1.0}, 0.25, 0.0);
    const TimeGrid g1(1.0, 256), g2(1.0, 512);
    CHECK(precision_residual(spec, g1, ModeArray(1, 257)).relative_residual == 0.0);
    auto sine = [](const TimeGrid& g) {
        ModeArray h(1, g.nodes());
        for (std::size_t k = 0; k < g.nodes(); ++k) h(0, k) = std::sin(M_PI * g.node(k));
        return h;
    };
    const PrecisionResidual r1 = precision_residual(spec, g1, sine(g1));
    const PrecisionResidual r2 = precision_residual(spec, g2, sine(g2));
    CHECK(r1.relative_residual <= 1e-2);
    CHECK(r1.relative_residual / r2.relative_residual >= 3.5);
    CHECK(r1.initial_defect == 0.0);
    CHECK(r2.terminal_defect < r1.terminal_defect);
    CHECK_THROWS_AS(precision_residual(spec.with_epsilon(0.5), g1, sine(g1)), std::invalid_argument);
}

TEST_CASE("Sobolev moment bound") {
    const OperatorSpec spec = OperatorSpec::laplacian(8, 0.25);
    const SobolevBound b = sobolev_moment_bound(spec, TimeGrid(1.0, 256), {10000, 20261018, 1});
    double trace = 0;
    for (int j = 1; j <= 8; ++j) trace += std::pow(double(j), -1.5);
    CHECK(b.rhs == doctest::Approx(0.5 * trace));
    CHECK(b.lhs.value < b.rhs);
    CHECK(std::abs(b.lhs.value - b.exact) < 3.0 * b.lhs.std_error + 1e-4);

    // One mode: integral of (1 - e^{-2t}) / 2 over [0, 1] against the bound 1/2.
    const SobolevBound one = sobolev_moment_bound(OperatorSpec({1.0}, 0.25, 0.0), TimeGrid(1.0, 256),
                                                  {20000, 20261018, 1});
    CHECK(one.exact == doctest::Approx(0.283834).epsilon(1e-6));
    CHECK(one.rhs == 0.5);
    CHECK(std::abs(one.lhs.value - one.exact) < 3.0 * one.lhs.std_error + 1e-5);
}
