#include <doctest.h>

#include <cmath>

#include "mildgirsanov/log.hpp"
#include "mildgirsanov/stationary_measure.hpp"

using namespace mg;

TEST_CASE("zero noise: the stationary recursion decays the initial draw") {
    const OperatorSpec spec({2.0}, 0.25, 0.0);
    const WindowGrid w = make_window(spec, DriftSpec::zero(), 1.0, 8);
    std::vector<double> xi(stationary_normals(spec, w), 0.0);
    CHECK(xi.size() == 1 + 2 * 8);
    xi[0] = 1.0;
    const StationarySample s = sample_stationary(spec, w, xi);
    const double h0 = 1.0 / std::sqrt(4.0);
    for (std::size_t k = 0; k <= 8; ++k) {
        CHECK(s.h(0, k) == doctest::Approx(h0 * std::exp(-2.0 * (w.grid.node(k) + 1.0))).epsilon(1e-13));
    }
    CHECK_THROWS_AS(sample_stationary(spec.with_epsilon(0.5), w, xi), std::invalid_argument);
}

TEST_CASE("stationary marginals and autocovariance") {
    const OperatorSpec spec({1.0}, 0.25, 0.0);
    const WindowGrid w = make_window(spec, DriftSpec::zero(), 2.0, 8);
    const std::size_t m = 100000;
    std::vector<double> s2(9, 0.0), s4(9, 0.0);
    double lag = 0.0, lag2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const StationarySample s = sample_stationary(spec, w, 17, i);
        for (std::size_t k = 0; k <= 8; ++k) {
            s2[k] += s.h(0, k) * s.h(0, k);
            s4[k] += std::pow(s.h(0, k), 4);
        }
        const double p = s.h(0, 0) * s.h(0, 4);
        lag += p;
        lag2 += p * p;
    }
    for (std::size_t k = 0; k <= 8; ++k) {
        const double var = s2[k] / m;
        const double se = std::sqrt((s4[k] / m - var * var) / m);
        CHECK(std::abs(var - 0.5) < 4.0 * se);
    }
    // Lag tau = 1: e^{-1} / 2.
    const double ac = lag / m;
    const double se = std::sqrt((lag2 / m - ac * ac) / m);
    CHECK(std::abs(ac - std::exp(-1.0) / 2.0) < 4.0 * se);
}

TEST_CASE("windows of different length share the increments near 0") {
    const OperatorSpec spec = OperatorSpec::laplacian(2);
    const WindowGrid full = make_window(spec, DriftSpec::zero(), 4.0, 64);
    const WindowGrid half = make_window(spec, DriftSpec::zero(), 2.0, 32);
    const StationarySample a = sample_stationary(spec, full, 5, 0);
    const StationarySample b = sample_stationary(spec, half, 5, 0);
    for (std::size_t k = 0; k < 32; ++k) CHECK(a.db(1, 32 + k) == b.db(1, k));
}

TEST_CASE("stationary weights") {
    set_warnings_enabled(false);
    const OperatorSpec spec = OperatorSpec::laplacian(2);
    const WindowGrid w = make_window(spec, DriftSpec::zero(), 4.0, 64);
    const StationarySample s = sample_stationary(spec, w, 1, 0);
    CHECK(log_weight_inf(spec, DriftSpec::zero(), s, w).log_weight == 0.0);

    const DriftSpec tanh = DriftSpec::bounded_tanh(0.5, 1.0, 2);
    const Estimate one = invariant_estimate(spec, tanh, make_window(spec, tanh, 8.0, 128),
                                            [](std::span<const double>) { return 1.0; }, {10000, 3, 1});
    CHECK(std::abs(one.value - 1.0) <= 3.0 * one.std_error);
    set_warnings_enabled(true);
}

TEST_CASE("linear drift invariant variances") {
    set_warnings_enabled(false);
    const OperatorSpec spec({1.0, 4.0, 9.0, 16.0}, 0.25, 0.0);
    const double c = -1.0;
    const double expected[] = {0.25, 0.1, 0.05, 0.029412};
    const DriftSpec drift = DriftSpec::linear(c);
    const WindowGrid w = make_window(spec, drift, 8.0, 256);
    std::vector<PathFunctional> fns;
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(linear_invariant_variance(spec, c, j, w.grid.dt()).variance == doctest::Approx(expected[j]).epsilon(1e-5));
        fns.push_back(at_origin([j](std::span<const double> z) { return z[j] * z[j]; }));
    }
    const SampleTable t = stationary_table(spec, drift, w, fns, {20000, 20261018, 1});
    for (std::size_t j = 0; j < 4; ++j) {
        const LinearInvariantOracle o = linear_invariant_variance(spec, c, j, w.grid.dt());
        const Estimate e = table_mean(t, j, true);
        CHECK(std::abs(e.value - o.variance) <= 3.0 * e.std_error + std::abs(o.discrete_variance - o.variance));
    }
    set_warnings_enabled(true);
}

TEST_CASE("long-run oracle reproduces the zero-drift invariant measure") {
    const OperatorSpec spec({1.0, 4.0}, 0.25, 0.0);
    const std::vector<StateFunction> phis{[](std::span<const double> z) { return z[0] * z[0]; },
                                          [](std::span<const double> z) { return z[1] * z[1]; }};
    LongRunOptions o;
    o.seed = 11;
    const std::vector<Estimate> r = long_run_oracle(spec, DriftSpec::zero(), phis, o);
    CHECK(std::abs(r[0].value - 0.5) < 4.0 * r[0].std_error);
    CHECK(std::abs(r[1].value - 0.125) < 4.0 * r[1].std_error);
}

TEST_CASE("Nadaraya-Watson and Silverman bandwidth") {
    const std::vector<double> xs{-1.0, 0.0, 0.5, 1.0, 2.0};
    const std::vector<double> ones(5, 1.0);
    const DensityRatioPoint p = nadaraya_watson(xs, ones, 0.3, 0.7);
    CHECK(p.psi == doctest::Approx(1.0));
    CHECK(p.local_count > 1.0);
    const std::vector<double> twos(5, 2.0);
    CHECK(nadaraya_watson(xs, twos, 0.3, 0.7).psi == doctest::Approx(2.0));

    // sd = sqrt(1.325) ~ 1.151; IQR = 1.0 - 0.0 = 1 -> min(1.151, 1/1.34) = 0.746.
    const double h = silverman_bandwidth(xs);
    CHECK(h == doctest::Approx(0.9 * (1.0 / 1.34) * std::pow(5.0, -0.2)));
}

TEST_CASE("density ratio closed form and zero drift") {
    const OperatorSpec spec({1.0}, 0.25, 0.0);
    CHECK(linear_density_ratio(spec, 0.0, 0.7) == 1.0);
    CHECK(linear_density_ratio(spec, -0.5, 0.0) == doctest::Approx(std::sqrt(1.5)));
    CHECK(linear_density_ratio(spec, -0.5, 1.0) == doctest::Approx(std::sqrt(1.5) * std::exp(-0.5)));

    set_warnings_enabled(false);
    const WindowGrid w = make_window(spec, DriftSpec::zero(), 4.0, 32);
    const std::vector<double> points{-0.5, 0.0, 0.5};
    const DensityRatioProfile prof = density_ratio_estimate(spec, DriftSpec::zero(), w, points, std::nullopt,
                                                            {5000, 1, 1}, 500);
    for (const auto& p : prof.points) CHECK(p.psi == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(prof.normalization.value == doctest::Approx(1.0).epsilon(1e-12));
    set_warnings_enabled(true);
}
