#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "mildgirsanov/estimate.hpp"
#include "mildgirsanov/rng.hpp"

using namespace mg;

TEST_CASE("Philox4x32-10 known-answer vectors") {
    using C = PhiloxCounter;
    CHECK(philox4x32_10(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams are keyed and reproducible") {
    NormalStream a(42, StreamTag::path, 7), b(42, StreamTag::path, 7);
    NormalStream other_index(42, StreamTag::path, 8), other_tag(42, StreamTag::stationary, 7),
        other_seed(43, StreamTag::path, 7);
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != other_index.normal());
    CHECK(x != other_tag.normal());
    CHECK(x != other_seed.normal());
}

TEST_CASE("uniform and normal moments") {
    NormalStream s(2026, StreamTag::auxiliary, 0);
    const std::size_t n = 200000;
    std::vector<double> u(n), z(n);
    for (auto& v : u) {
        v = s.uniform();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    s.fill_normal(z);
    double mu = 0, m2 = 0, m4 = 0, mean_u = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mu += z[i];
        m2 += z[i] * z[i];
        m4 += std::pow(z[i], 4);
        mean_u += u[i];
    }
    mu /= n;
    m2 /= n;
    m4 /= n;
    mean_u /= n;
    CHECK(std::abs(mean_u - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
    CHECK(std::abs(mu) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / n));
}

TEST_CASE("compensated summation") {
    const std::vector<double> v{1e16, 1.0, -1e16};
    CHECK(compensated_sum(v) == 1.0);
    const std::vector<double> w{0.1, 0.2, 0.3};
    CHECK(compensated_sum(w) == doctest::Approx(0.6).epsilon(1e-16));
}

TEST_CASE("mean, weighted and self-normalized estimates") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const Estimate e = mean_estimate(v);
    CHECK(e.value == 2.5);
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(e.n == 4);
    CHECK(e.ess == 4.0);

    const std::vector<double> w{2.0, 2.0, 2.0, 2.0};
    CHECK(weighted_mean_estimate(v, w).value == 5.0);
    CHECK(self_normalized_estimate(v, w).value == doctest::Approx(2.5));
    CHECK(effective_sample_size(w) == doctest::Approx(4.0));
    const std::vector<double> spike{1.0, 0.0, 0.0};
    CHECK(effective_sample_size(spike) == doctest::Approx(1.0));
    CHECK_THROWS_AS(mean_estimate(std::vector<double>{}), std::invalid_argument);
    CHECK_THROWS_AS(weighted_mean_estimate(v, spike), std::invalid_argument);
}

TEST_CASE("variance estimate is the unbiased sample variance") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(variance_estimate(v, {}).value == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("parallel_for visits each index exactly once") {
    for (unsigned workers : {1u, 3u, 8u}) {
        std::vector<std::atomic<int>> hits(1001);
        parallel_for(hits.size(), workers, [&](std::size_t i) { hits[i]++; });
        for (const auto& h : hits) CHECK(h.load() == 1);
    }
}
