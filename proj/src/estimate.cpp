#include "mildgirsanov/estimate.hpp"

#include <cmath>
#include <stdexcept>

namespace mg {

double compensated_sum(std::span<const double> values) noexcept {
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    return sum + carry;
}

namespace {

double sample_variance(std::span<const double> values, double mean) {
    if (values.size() < 2) return 0.0;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mean;
        sq[i] = d * d;
    }
    return compensated_sum(sq) / static_cast<double>(values.size() - 1);
}

}  // namespace

double effective_sample_size(std::span<const double> weights) noexcept {
    std::vector<double> sq(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) sq[i] = weights[i] * weights[i];
    const double s = compensated_sum(weights);
    const double s2 = compensated_sum(sq);
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

Estimate mean_estimate(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean_estimate: no samples");
    Estimate e;
    e.n = values.size();
    const double n = static_cast<double>(e.n);
    e.value = compensated_sum(values) / n;
    e.std_error = std::sqrt(sample_variance(values, e.value) / n);
    e.ess = n;
    return e;
}

Estimate weighted_mean_estimate(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) {
        throw std::invalid_argument("weighted_mean_estimate: size mismatch");
    }
    std::vector<double> prod(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) prod[i] = values[i] * weights[i];
    Estimate e = mean_estimate(prod);
    e.ess = effective_sample_size(weights);
    return e;
}

Estimate self_normalized_estimate(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size() || values.empty()) {
        throw std::invalid_argument("self_normalized_estimate: size mismatch");
    }
    const std::size_t n = values.size();
    std::vector<double> prod(n);
    for (std::size_t i = 0; i < n; ++i) prod[i] = values[i] * weights[i];
    const double wsum = compensated_sum(weights);
    Estimate e;
    e.n = n;
    e.value = compensated_sum(prod) / wsum;
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = weights[i] * (values[i] - e.value);
        resid[i] = r * r;
    }
    e.std_error = std::sqrt(compensated_sum(resid)) / wsum;
    e.ess = effective_sample_size(weights);
    return e;
}

Estimate variance_estimate(std::span<const double> values, std::span<const double> weights) {
    const std::size_t n = values.size();
    if (n < 2) throw std::invalid_argument("variance_estimate: need at least two samples");
    if (!weights.empty() && weights.size() != n) {
        throw std::invalid_argument("variance_estimate: size mismatch");
    }
    std::vector<double> first(n), second(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        first[i] = w * values[i];
        second[i] = w * values[i] * values[i];
    }
    const double dn = static_cast<double>(n);
    const double m1 = compensated_sum(first) / dn;
    const double m2 = compensated_sum(second) / dn;
    // Linearization of m2 - m1^2 around the sample moments.
    std::vector<double> influence(n);
    for (std::size_t i = 0; i < n; ++i) influence[i] = second[i] - 2.0 * m1 * first[i];
    const Estimate lin = mean_estimate(influence);
    Estimate e;
    e.n = n;
    e.value = m2 - m1 * m1;
    if (weights.empty()) e.value *= dn / (dn - 1.0);
    e.std_error = lin.std_error;
    e.ess = weights.empty() ? dn : effective_sample_size(weights);
    return e;
}

}  // namespace mg
