#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mildgirsanov/estimate.hpp"
#include "mildgirsanov/rng.hpp"
#include "mildgirsanov/spectral_model.hpp"

namespace mg {

/// Uniform grid t_k = start + k dt, k = 0..steps.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps, double start = 0.0);

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t nodes() const noexcept { return steps_ + 1; }
    double dt() const noexcept { return dt_; }
    double start() const noexcept { return start_; }
    double node(std::size_t k) const noexcept {
        return k == steps_ ? start_ + horizon_ : start_ + static_cast<double>(k) * dt_;
    }

private:
    double horizon_;
    std::size_t steps_;
    double dt_;
    double start_;
};

/// modes x columns array, one row per mode.
class ModeArray {
public:
    ModeArray() = default;
    ModeArray(std::size_t modes, std::size_t columns, double fill = 0.0)
        : modes_(modes), columns_(columns), values_(modes * columns, fill) {}

    std::size_t modes() const noexcept { return modes_; }
    std::size_t columns() const noexcept { return columns_; }

    double& operator()(std::size_t j, std::size_t k) noexcept { return values_[j * columns_ + k]; }
    double operator()(std::size_t j, std::size_t k) const noexcept { return values_[j * columns_ + k]; }

    std::span<double> row(std::size_t j) noexcept { return {values_.data() + j * columns_, columns_}; }
    std::span<const double> row(std::size_t j) const noexcept {
        return {values_.data() + j * columns_, columns_};
    }

    /// Copy of column k (the mode vector at one node).
    ModeVector column(std::size_t k) const;
    void set_column(std::size_t k, std::span<const double> v);

    std::span<const double> flat() const noexcept { return values_; }
    std::span<double> flat() noexcept { return values_; }

    bool operator==(const ModeArray&) const = default;

private:
    std::size_t modes_ = 0;
    std::size_t columns_ = 0;
    std::vector<double> values_;
};

/// One draw of the stochastic convolution at the grid nodes together with the
/// Brownian increments that drive it.
struct GaussianPathSample {
    ModeArray h;   // modes x nodes, h(., 0) = 0 for paths started at zero
    ModeArray db;  // modes x steps
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

/// Exact one-step law of the pair (dB, eta) for a single mode:
/// eta = int_0^dt e^{-lambda(dt - s)} dB(s), so
/// Var(dB) = dt, Var(eta) = (1 - e^{-2 lambda dt}) / (2 lambda),
/// Cov = (1 - e^{-lambda dt}) / lambda.
struct PairStep {
    double decay = 1.0;       // e^{-lambda dt}
    double var_eta = 0.0;
    double cov = 0.0;
    double db_scale = 0.0;    // sqrt(dt)
    double eta_from_first = 0.0;
    double eta_from_second = 0.0;
    double noise_scale = 1.0; // lambda^{-epsilon/2}
    double phi1_dt = 0.0;     // dt * phi_1(lambda dt) = (1 - e^{-lambda dt}) / lambda
};

/// Per-mode pair coefficients; series expansions are used for lambda dt < 1e-4.
/// Throws std::domain_error when the 2x2 covariance is numerically not PSD.
std::vector<PairStep> pair_steps(const OperatorSpec& spec, double dt);

/// phi_1(z) = (1 - e^{-z}) / z with phi_1(0) = 1.
double phi1(double z) noexcept;

/// Number of standard normals consumed per sample: two per mode per step.
std::size_t normals_per_path(const OperatorSpec& spec, const TimeGrid& grid) noexcept;

/// Exact-marginal sampler of W_A (colored by lambda^{-epsilon/2} when epsilon > 0).
/// `std_normals` holds pairs (xi_1, xi_2) ordered by step then mode.
GaussianPathSample sample_convolution(const OperatorSpec& spec, const TimeGrid& grid,
                                      std::span<const double> std_normals);

GaussianPathSample sample_convolution(const OperatorSpec& spec, const TimeGrid& grid,
                                      std::uint64_t master_seed, std::uint64_t index);

/// Continues the pair recursion from a given initial column (used for stationary windows).
GaussianPathSample sample_from(const OperatorSpec& spec, const TimeGrid& grid,
                               std::span<const double> initial, std::span<const double> std_normals);

/// Brownian increments reconstructed from the path alone,
/// dB ~ lambda^{epsilon/2} (h_{k+1} - h_k + lambda h_k dt). Cross-check mode only.
ModeArray reconstruct_increments(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& h);

/// Covariance kernel K(t,s) = int_0^{min(t,s)} e^{(t+s-2r)A} dr, diagonal in the eigenbasis.
class CovarianceKernel {
public:
    explicit CovarianceKernel(OperatorSpec spec) : spec_(std::move(spec)) {}

    /// Component j: lambda_j^{-eps} (e^{-lambda_j |t-s|} - e^{-lambda_j (t+s)}) / (2 lambda_j).
    ModeVector operator()(double t, double s) const;
    double mode(std::size_t j, double t, double s) const;

    const OperatorSpec& spec() const noexcept { return spec_; }

private:
    OperatorSpec spec_;
};

ModeVector kernel_eval(const CovarianceKernel& kernel, double t, double s);

struct CovarianceEntry {
    std::size_t mode = 0;
    std::size_t node_a = 0;
    std::size_t node_b = 0;
    double sample = 0.0;
    double exact = 0.0;
    double std_error = 0.0;
};

struct CovarianceReport {
    std::vector<CovarianceEntry> entries;
    double max_deviation = 0.0;     // max |sample - exact|
    double max_z = 0.0;             // max |sample - exact| / SE
    double max_cross_mode_z = 0.0;  // max |cov(mode 0, mode 1)| / SE at matching nodes
    std::size_t samples = 0;
};

struct McOptions {
    std::size_t samples = 20000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Sample covariances of h at every pair from `node_set` against the kernel.
CovarianceReport empirical_covariance_check(const OperatorSpec& spec, const TimeGrid& grid,
                                            std::span<const std::size_t> node_set,
                                            const McOptions& mc);

struct PrecisionResidual {
    double relative_residual = 0.0;  // |f'' - A^2 f + h| / |h| on interior nodes
    double initial_defect = 0.0;     // |f(0)|
    double terminal_defect = 0.0;    // |f'(T) - A f(T)| by one-sided difference
};

/// f = Qbar_T h by trapezoidal quadrature, checked against f'' - A^2 f = -h,
/// f(0) = 0, f'(T) = A f(T). White noise only; N >= 16.
PrecisionResidual precision_residual(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& h);

struct SobolevBound {
    Estimate lhs;      // E int_0^T |(-A)^{beta/2} h(t)|^2 dt
    double rhs = 0.0;  // (T/2) Tr[(-A)^{beta-1}]
    double exact = 0.0;  // sum_j lambda_j^beta int_0^T (1 - e^{-2 lambda_j t}) / (2 lambda_j) dt
};

SobolevBound sobolev_moment_bound(const OperatorSpec& spec, const TimeGrid& grid, const McOptions& mc);

/// Var h_j(t) = lambda_j^{-eps} (1 - e^{-2 lambda_j t}) / (2 lambda_j).
double convolution_variance(const OperatorSpec& spec, std::size_t j, double t);

}  // namespace mg
