#pragma once

#include <cstdint>
#include <span>

#include "mildgirsanov/path_space.hpp"
#include "mildgirsanov/spectral_model.hpp"

namespace mg {

enum class PathRole { k, gamma, u, f, h };

/// Grid function on a TimeGrid (modes x nodes).
struct DeterministicPath {
    ModeArray values;
    PathRole role = PathRole::h;
};

/// gamma_x(h) together with the drift record f(t_k) = b(h(t_k) + e^{t_k A} x).
struct GammaPath {
    DeterministicPath gamma;  // modes x nodes, gamma(0) = 0
    DeterministicPath drift;  // modes x nodes
};

/// Drift convolution gamma_x(h)(t) = int_0^t e^{(t-s)A} b(h(s) + e^{sA} x) ds by the
/// left-endpoint exponential Euler recursion
///   gamma(t_{k+1}) = e^{A dt} gamma(t_k) + dt phi_1(lambda dt) b(h(t_k) + e^{t_k A} x).
GammaPath gamma(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                const ModeArray& h, const TimeGrid& grid);

/// G_x(h) = h - gamma_x(h).
DeterministicPath apply_G(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const ModeArray& h, const TimeGrid& grid);

/// Solution k of k = gamma_x(k) + h by forward marching with the same quadrature as
/// `gamma`, so apply_G and solve_F are inverse to each other on the grid up to the
/// rounding of one addition per node.
DeterministicPath solve_F(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const ModeArray& h, const TimeGrid& grid);

struct CMNormReport {
    double direct_sq = 0.0;    // sum_j lambda^eps [lambda u(T)^2 + sum_k dt((du/dt)^2 + lambda^2 u^2)]
    double drift_l2_sq = 0.0;  // sum_k dt |(-A)^{eps/2} f(t_k)|^2
    double rel_gap = 0.0;
};

/// Cameron-Martin norm of u = gamma_x(h) computed twice: from the maximal-regularity
/// form and from the drift record f (u' = Au + f). Rejects u(0) != 0.
CMNormReport cm_norm_sq(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& u,
                        const ModeArray& f);

/// Adapted sum  sum_k sum_j lambda_j^{eps/2} path_j(t_k) dB_{j,k}.
double ito_integral(const ModeArray& path, const ModeArray& db, const OperatorSpec& spec);
double ito_integral(const DeterministicPath& path, const GaussianPathSample& sample,
                    const OperatorSpec& spec);

/// Partial Itô sums S_m = sum_{k<m} ..., m = 0..N. Used by the causality test.
std::vector<double> ito_partial_sums(const ModeArray& path, const ModeArray& db, const OperatorSpec& spec);

struct NilpotencyReport {
    std::size_t dimension = 0;          // N d (nodes 1..N, since h(0) = 0)
    double max_upper_fd = 0.0;          // largest |J_fd| entry with input node >= output node
    double max_upper_analytic = 0.0;
    double max_fd_analytic_gap = 0.0;   // max |J_fd - J| over all entries
    double max_power_entry = 0.0;       // max |J^N|
    double max_entry = 0.0;             // max |J|
    double det_i_minus_j = 0.0;         // det(I - J) by LU
    double trace = 0.0;
    double det2 = 0.0;                  // det(I - J) exp(tr J)
    std::size_t probes = 0;
};

/// Jacobian of h -> gamma_x(h) on nodes 1..N at `probe_count` random base points.
/// Requires a differentiable drift, N <= 32 and d <= 4.
NilpotencyReport nilpotency_check(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                                  const TimeGrid& grid, std::size_t probe_count, std::uint64_t seed = 7);

struct RegularityReport {
    double f_l2 = 0.0;
    double u_prime_l2 = 0.0;
    double au_l2 = 0.0;
    double terminal_ratio = 0.0;  // |(-A)^{1/2} u(T)| / |f|_X, recorded only
    double slack = 1.0;           // 1 + 10 dt
    bool derivative_bound_holds = false;  // |u'| <= 2 |f| slack
    bool operator_bound_holds = false;    // |Au| <= |f| slack
};

/// u = e^{.A} * f by the phi_1 recursion, then the maximal-regularity inequalities.
RegularityReport regularity_check(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& f);

/// Convolution u(t) = int_0^t e^{(t-s)A} f(s) ds by the phi_1 recursion (left endpoint).
ModeArray convolve(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& f);

/// e^{t_k A} x at every node.
ModeArray free_evolution(const OperatorSpec& spec, const TimeGrid& grid, std::span<const double> x);

}  // namespace mg
