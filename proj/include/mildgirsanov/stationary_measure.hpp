#pragma once

#include <optional>
#include <vector>

#include "mildgirsanov/girsanov_mc.hpp"

namespace mg {

/// Window [-S, 0] standing in for (-inf, 0].
struct WindowGrid {
    TimeGrid grid;
    double truncation_bound = 0.0;  // ‖b‖_∞ e^{-omega S} / omega (RMS tail bound for linear drifts)

    double length() const noexcept { return grid.horizon(); }
};

/// Window of length S with `steps` steps. The truncation bound uses ‖b‖_∞ when
/// available; for linear drifts it uses |c| times the stationary RMS of h.
WindowGrid make_window(const OperatorSpec& spec, const DriftSpec& drift, double length, std::size_t steps);

/// Stationary Ornstein-Uhlenbeck window: h(-S) ~ N(0, (2 lambda_j)^{-1}) per mode,
/// then the exact pair recursion.
struct StationarySample {
    ModeArray h;
    ModeArray db;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

std::size_t stationary_normals(const OperatorSpec& spec, const WindowGrid& window) noexcept;

/// Normals are laid out as d initial draws followed by the step pairs. Steps are
/// counted backwards from t = 0, so windows of different length driven by the
/// same stream share their increments near t = 0.
StationarySample sample_stationary(const OperatorSpec& spec, const WindowGrid& window,
                                   std::span<const double> std_normals);
StationarySample sample_stationary(const OperatorSpec& spec, const WindowGrid& window, std::uint64_t master_seed,
                                   std::uint64_t index);

/// log rho_{-inf}: gamma by the phi_1 recursion started at gamma(-S) = 0 with b(h(t)),
/// Cameron-Martin term by the drift-L2 identity, divergence against the window increments.
WeightedSample log_weight_inf(const OperatorSpec& spec, const DriftSpec& drift, const StationarySample& sample,
                              const WindowGrid& window);

/// Per-sample values of phi(h(0)) (or path functionals on the window) with weights rho_{-inf}.
SampleTable stationary_table(const OperatorSpec& spec, const DriftSpec& drift, const WindowGrid& window,
                             std::span<const PathFunctional> functionals, const McOptions& mc);

/// Plain average of phi(h(0)) rho_{-inf}(h).
Estimate invariant_estimate(const OperatorSpec& spec, const DriftSpec& drift, const WindowGrid& window,
                            const StateFunction& phi, const McOptions& mc);

/// Path functional evaluated at the window's last node (t = 0).
PathFunctional at_origin(StateFunction phi);

struct LongRunOptions {
    double burn_in = 10.0;
    double averaging = 100.0;
    double dt = 1.0 / 32.0;
    std::size_t chains = 64;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

/// Ergodic averages of phi(Z(t)) over [T_burn, T_burn + T_avg] for the direct
/// exponential-Euler simulation started at 0; the standard error is taken across chains.
std::vector<Estimate> long_run_oracle(const OperatorSpec& spec, const DriftSpec& drift,
                                      std::span<const StateFunction> phis, const LongRunOptions& options);

struct DensityRatioPoint {
    double x = 0.0;
    double psi = 0.0;
    double local_count = 0.0;  // (sum K)^2 / sum K^2
};

struct DensityRatioProfile {
    std::vector<DensityRatioPoint> points;
    double bandwidth = 0.0;
    Estimate normalization;  // Monte Carlo integral of psi_hat against mu
};

/// Nadaraya-Watson estimate of E[rho_{-inf} | h_1(0) = x], i.e. d nu / d mu along the
/// first coordinate. Bandwidth defaults to Silverman's rule on h_1(0).
DensityRatioProfile density_ratio_estimate(const OperatorSpec& spec, const DriftSpec& drift,
                                           const WindowGrid& window, std::span<const double> eval_points,
                                           std::optional<double> bandwidth, const McOptions& mc,
                                           std::size_t normalization_points = 2000);

/// Kernel-regression core, exposed for testing: psi_hat at x from (abscissa, weight) pairs.
DensityRatioPoint nadaraya_watson(std::span<const double> abscissae, std::span<const double> weights, double x,
                                  double bandwidth);

double silverman_bandwidth(std::span<const double> abscissae);

/// First-coordinate density ratio for b(z) = c z: sqrt((lambda_1 - c)/lambda_1) exp(c x^2).
double linear_density_ratio(const OperatorSpec& spec, double c, double x);

/// Per-mode invariant variance 1 / (2 (lambda_j - c)) and the exponential-Euler scheme's
/// stationary variance on step dt.
struct LinearInvariantOracle {
    double variance = 0.0;
    double discrete_variance = 0.0;
};

LinearInvariantOracle linear_invariant_variance(const OperatorSpec& spec, double c, std::size_t mode, double dt);

}  // namespace mg
