#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mildgirsanov/estimate.hpp"
#include "mildgirsanov/mild_maps.hpp"
#include "mildgirsanov/path_space.hpp"

namespace mg {

/// Functional of a solution path Z sampled at the grid nodes (modes x nodes).
using PathFunctional = std::function<double(const TimeGrid&, const ModeArray&)>;
/// Function of the state at a single time.
using StateFunction = std::function<double(std::span<const double>)>;

struct NamedFunctional {
    std::string name;
    PathFunctional fn;
};

NamedFunctional terminal_coordinate(std::size_t mode);
NamedFunctional terminal_square(std::size_t mode);
NamedFunctional terminal_squared_norm();
NamedFunctional running_sup(std::size_t mode);
NamedFunctional time_average(std::size_t mode);

/// Terminal coordinate 1, terminal squared norm, running sup of coordinate 1, time average of coordinate 1.
std::vector<NamedFunctional> builtin_functionals();

/// Lifts a state function to a path functional evaluated at the final node.
PathFunctional at_terminal(StateFunction phi);

/// log rho = -cm_sq / 2 + ito.
///
/// `cm_sq` is the drift-L2 form of |gamma_x(h)|^2 in the Cameron-Martin space and
/// `ito` the Gaussian divergence of gamma_x(h), realized against the driving
/// increments as sum_k <(-A)^{eps/2} f(t_k), dB_k> with f the drift record.
struct WeightedSample {
    double log_weight = 0.0;
    double cm_sq = 0.0;
    double cm_direct_sq = 0.0;  // maximal-regularity discretization, diagnostic
    double ito = 0.0;
    double ito_gamma = 0.0;     // sum_k <(-A)^{eps/2} gamma(t_k), dB_k>
    double gamma_l2_sq = 0.0;   // sum_k dt |(-A)^{eps/2} gamma(t_k)|^2
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

struct WeightOptions {
    /// Bound assertions downstream need ‖b‖_∞; refuse up front if it is missing.
    bool require_sup_bound = false;
};

WeightedSample log_weight(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const GaussianPathSample& sample, const TimeGrid& grid,
                          const WeightOptions& options = {});

/// Per-sample values shared by all estimators: one row per functional.
struct SampleTable {
    std::vector<double> log_weights;  // 0 for direct sampling
    std::vector<double> ito_gamma;
    std::vector<double> gamma_l2_sq;
    std::vector<double> cm_sq;
    std::vector<std::vector<double>> values;

    std::vector<double> weights() const;
};

struct GirsanovOptions {
    McOptions mc;
    bool self_normalized = false;
};

/// Phi(h + e^{.A} x) with weights rho over M draws of the stochastic convolution.
SampleTable weighted_table(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                           const TimeGrid& grid, std::span<const PathFunctional> functionals,
                           const McOptions& mc);

/// Phi(Z) for Z = K + e^{.A} x simulated with the drift on, from the same sampler streams.
SampleTable direct_table(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                         const TimeGrid& grid, std::span<const PathFunctional> functionals,
                         const McOptions& mc);

/// Exponential-Euler solution path K_x of the mild equation driven by the given normals.
ModeArray simulate_direct(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const TimeGrid& grid, std::span<const double> std_normals);

Estimate table_mean(const SampleTable& table, std::size_t functional, bool weighted,
                    bool self_normalized = false);
Estimate table_variance(const SampleTable& table, std::size_t functional, bool weighted);

Estimate weighted_expectation(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                              const TimeGrid& grid, const PathFunctional& phi, const GirsanovOptions& options);

Estimate direct_expectation(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                            const TimeGrid& grid, const PathFunctional& phi, const McOptions& mc);

struct SemigroupComparison {
    Estimate direct;
    Estimate weighted;
};

/// P_T phi(x) by both estimators.
SemigroupComparison semigroup_compare(const OperatorSpec& spec, const DriftSpec& drift,
                                      std::span<const double> x, const TimeGrid& grid,
                                      const StateFunction& phi, const McOptions& mc);

struct MomentRow {
    int order = 1;
    Estimate moment;  // E[rho^n]
    double bound = 1.0;  // exp{(n^2 - n) ‖b‖_∞^2}
    bool holds = false;  // moment <= bound (1 + 3 rel SE)
};

struct MomentBoundTable {
    std::vector<MomentRow> rows;
    Estimate ito_gamma_sq;  // E[I(gamma)^2]
    double ito_bound = 0.0;  // (T / 2 omega) ‖b‖_∞^2
    bool ito_holds = false;
    Estimate cm_sq;          // E |gamma|^2 in the Cameron-Martin space
    double cm_stated_bound = 0.0;  // 2 ‖b‖_∞^2, recorded only
    double cm_max = 0.0;
};

/// Mean of rho^n against exp{(n^2 - n)‖b‖_∞^2} and E[I(gamma)^2] against (T/2 omega)‖b‖_∞^2.
/// Refuses drifts without a sup bound.
MomentBoundTable moment_bound_suite(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                                    const TimeGrid& grid, std::span<const int> orders, const McOptions& mc);

/// Mean of exp(n * log_weight) computed with a max shift so large n does not overflow.
Estimate weight_moment(std::span<const double> log_weights, int order);

/// Closed forms for b(z) = c z: Z_j(T) is Gaussian with shifted eigenvalue lambda_j - c.
struct LinearOuOracle {
    double mean = 0.0;
    double variance = 0.0;
    double discrete_mean = 0.0;      // exact law of the exponential-Euler scheme on the grid
    double discrete_variance = 0.0;
};

LinearOuOracle linear_ou_terminal(const OperatorSpec& spec, double c, std::span<const double> x,
                                  const TimeGrid& grid, std::size_t mode);

/// E cos(<xi, Z(T)>) for zero drift.
double zero_drift_characteristic(const OperatorSpec& spec, std::span<const double> x, std::span<const double> xi,
                                 double horizon);

}  // namespace mg
