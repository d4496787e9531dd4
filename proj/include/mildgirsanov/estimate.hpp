#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <thread>
#include <vector>

namespace mg {

/// Monte Carlo value with its standard error.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    double ess = 0.0;  // (sum w)^2 / sum w^2; equals n for unweighted estimates
    std::size_t n = 0;
};

/// Neumaier-compensated sum taken in index order.
double compensated_sum(std::span<const double> values) noexcept;

/// Sample mean with standard error sd / sqrt(n).
Estimate mean_estimate(std::span<const double> values);

/// Plain importance-weighted mean: average of values[i] * weights[i].
Estimate weighted_mean_estimate(std::span<const double> values, std::span<const double> weights);

/// Self-normalized importance-weighted mean with delta-method standard error.
Estimate self_normalized_estimate(std::span<const double> values, std::span<const double> weights);

/// Variance of a quantity under (optionally weighted) sampling, with delta-method SE.
/// Empty `weights` means unit weights.
Estimate variance_estimate(std::span<const double> values, std::span<const double> weights);

double effective_sample_size(std::span<const double> weights) noexcept;

/// Runs body(i) for i in [0, count) on `workers` threads. Each index is handled
/// exactly once; callers write results into per-index slots so that any later
/// reduction is independent of the worker count.
template <class Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
    const unsigned w = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (w == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(w);
    for (unsigned t = 0; t < w; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t begin = count * t / w;
            const std::size_t end = count * (t + 1) / w;
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
}

}  // namespace mg
