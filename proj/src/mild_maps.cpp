#include "mildgirsanov/mild_maps.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace mg {

namespace {

void check_path(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& h, const char* what) {
    if (h.modes() != spec.modes() || h.columns() != grid.nodes()) {
        throw DimensionError(std::string(what) + ": path does not match operator and grid");
    }
}

double color_weight(const OperatorSpec& spec, std::size_t j, double power) {
    return spec.epsilon() == 0.0 ? 1.0 : std::pow(spec.eigenvalue(j), power * spec.epsilon());
}

// Shared left-endpoint march. `state` holds the path at which b is evaluated:
// for gamma it is the given h, for solve_F it is built as the march proceeds.
template <class StateAt>
void march(const OperatorSpec& spec, const DriftSpec& drift, const ModeArray& free, const TimeGrid& grid,
           StateAt&& state_at, ModeArray& conv, ModeArray& record) {
    const std::size_t d = spec.modes();
    const auto steps = pair_steps(spec, grid.dt());
    ModeVector z(d), f(d);
    for (std::size_t k = 0; k <= grid.steps(); ++k) {
        for (std::size_t j = 0; j < d; ++j) z[j] = state_at(j, k) + free(j, k);
        drift_eval_into(drift, z, f);
        record.set_column(k, f);
        if (k == grid.steps()) break;
        for (std::size_t j = 0; j < d; ++j) {
            conv(j, k + 1) = steps[j].decay * conv(j, k) + steps[j].phi1_dt * f[j];
        }
    }
}

}  // namespace

ModeArray free_evolution(const OperatorSpec& spec, const TimeGrid& grid, std::span<const double> x) {
    require_modes(spec, x, "initial state");
    ModeArray out(spec.modes(), grid.nodes());
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            out(j, k) = std::exp(-spec.eigenvalue(j) * (grid.node(k) - grid.start())) * x[j];
        }
    }
    return out;
}

GammaPath gamma(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                const ModeArray& h, const TimeGrid& grid) {
    check_path(spec, grid, h, "gamma");
    const ModeArray free = free_evolution(spec, grid, x);
    GammaPath out{{ModeArray(spec.modes(), grid.nodes()), PathRole::gamma},
                  {ModeArray(spec.modes(), grid.nodes()), PathRole::f}};
    march(spec, drift, free, grid, [&](std::size_t j, std::size_t k) { return h(j, k); },
          out.gamma.values, out.drift.values);
    return out;
}

DeterministicPath apply_G(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const ModeArray& h, const TimeGrid& grid) {
    const GammaPath g = gamma(spec, drift, x, h, grid);
    DeterministicPath out{h, PathRole::h};
    auto dst = out.values.flat();
    const auto src = g.gamma.values.flat();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
    return out;
}

DeterministicPath solve_F(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const ModeArray& h, const TimeGrid& grid) {
    check_path(spec, grid, h, "solve_F");
    const ModeArray free = free_evolution(spec, grid, x);
    ModeArray y(spec.modes(), grid.nodes());
    ModeArray record(spec.modes(), grid.nodes());
    DeterministicPath k{ModeArray(spec.modes(), grid.nodes()), PathRole::k};
    // k(t_m) is final once y(t_m) is known, which the march guarantees before reading it.
    march(spec, drift, free, grid,
          [&](std::size_t j, std::size_t m) {
              k.values(j, m) = y(j, m) + h(j, m);
              return k.values(j, m);
          },
          y, record);
    return k;
}

CMNormReport cm_norm_sq(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& u,
                        const ModeArray& f) {
    check_path(spec, grid, u, "cm_norm_sq");
    if (f.modes() != spec.modes() || f.columns() < grid.steps()) {
        throw DimensionError("cm_norm_sq: drift record does not match operator and grid");
    }
    for (std::size_t j = 0; j < u.modes(); ++j) {
        if (u(j, 0) != 0.0) throw std::invalid_argument("cm_norm_sq: Cameron-Martin paths start at 0");
    }
    const double dt = grid.dt();
    const std::size_t n = grid.steps();
    CMNormReport r;
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        const double lambda = spec.eigenvalue(j);
        const double color = color_weight(spec, j, 1.0);
        double path_part = 0.0;
        double drift_part = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double slope = (u(j, k + 1) - u(j, k)) / dt;
            path_part += dt * (slope * slope + lambda * lambda * u(j, k) * u(j, k));
            drift_part += dt * f(j, k) * f(j, k);
        }
        r.direct_sq += color * (lambda * u(j, n) * u(j, n) + path_part);
        r.drift_l2_sq += color * drift_part;
    }
    r.rel_gap = std::abs(r.direct_sq - r.drift_l2_sq) / std::max(r.drift_l2_sq, 1e-30);
    return r;
}

double ito_integral(const ModeArray& path, const ModeArray& db, const OperatorSpec& spec) {
    if (path.modes() != db.modes() || path.columns() < db.columns()) {
        throw DimensionError("ito_integral: integrand and increments are on different grids");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < db.modes(); ++j) {
        const double scale = color_weight(spec, j, 0.5);
        double acc = 0.0;
        for (std::size_t k = 0; k < db.columns(); ++k) acc += path(j, k) * db(j, k);
        total += scale * acc;
    }
    return total;
}

double ito_integral(const DeterministicPath& path, const GaussianPathSample& sample, const OperatorSpec& spec) {
    return ito_integral(path.values, sample.db, spec);
}

std::vector<double> ito_partial_sums(const ModeArray& path, const ModeArray& db, const OperatorSpec& spec) {
    std::vector<double> sums(db.columns() + 1, 0.0);
    for (std::size_t k = 0; k < db.columns(); ++k) {
        double step = 0.0;
        for (std::size_t j = 0; j < db.modes(); ++j) {
            step += color_weight(spec, j, 0.5) * path(j, k) * db(j, k);
        }
        sums[k + 1] = sums[k] + step;
    }
    return sums;
}

NilpotencyReport nilpotency_check(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                                  const TimeGrid& grid, std::size_t probe_count, std::uint64_t seed) {
    if (!drift.differentiable()) throw std::invalid_argument("nilpotency_check needs a differentiable drift");
    if (grid.steps() > 32 || spec.modes() > 4) {
        throw std::invalid_argument("nilpotency_check runs on a coarse probe (N <= 32, d <= 4)");
    }
    const std::size_t d = spec.modes();
    const std::size_t n = grid.steps();
    const std::size_t dim = n * d;
    // Row/column index for node k in 1..N and mode j.
    auto index = [d](std::size_t k, std::size_t j) { return (k - 1) * d + j; };
    const auto steps = pair_steps(spec, grid.dt());
    const ModeArray free = free_evolution(spec, grid, x);

    NilpotencyReport report;
    report.dimension = dim;
    report.probes = probe_count;
    report.det_i_minus_j = 1.0;
    report.det2 = 1.0;
    constexpr double fd_step = 1e-7;
    for (std::size_t probe = 0; probe < probe_count; ++probe) {
        NormalStream stream(seed, StreamTag::auxiliary, probe);
        ModeArray h(d, grid.nodes());
        for (std::size_t k = 1; k <= n; ++k) {
            for (std::size_t j = 0; j < d; ++j) h(j, k) = stream.normal();
        }

        // Tangent propagation: d gamma(t_{k+1}) / d h(t_m) = e^{A dt(k-m)} dt phi_1 b'(z_m) for k >= m.
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        ModeVector z(d);
        for (std::size_t m = 1; m <= n; ++m) {
            for (std::size_t j = 0; j < d; ++j) z[j] = h(j, m) + free(j, m);
            const ModeVector slope = drift_derivative(drift, z);
            for (std::size_t j = 0; j < d; ++j) {
                double tangent = steps[j].phi1_dt * slope[j];
                for (std::size_t k = m + 1; k <= n; ++k) {
                    jac(static_cast<Eigen::Index>(index(k, j)), static_cast<Eigen::Index>(index(m, j))) = tangent;
                    tangent *= steps[j].decay;
                }
            }
        }

        const ModeArray base = gamma(spec, drift, x, h, grid).gamma.values;
        Eigen::MatrixXd fd = Eigen::MatrixXd::Zero(jac.rows(), jac.cols());
        for (std::size_t m = 1; m <= n; ++m) {
            for (std::size_t jm = 0; jm < d; ++jm) {
                ModeArray bumped = h;
                bumped(jm, m) += fd_step;
                const ModeArray g = gamma(spec, drift, x, bumped, grid).gamma.values;
                for (std::size_t k = 1; k <= n; ++k) {
                    for (std::size_t j = 0; j < d; ++j) {
                        fd(static_cast<Eigen::Index>(index(k, j)), static_cast<Eigen::Index>(index(m, jm))) =
                            (g(j, k) - base(j, k)) / fd_step;
                    }
                }
            }
        }

        for (std::size_t k = 1; k <= n; ++k) {
            for (std::size_t m = k; m <= n; ++m) {
                for (std::size_t j = 0; j < d; ++j) {
                    for (std::size_t jm = 0; jm < d; ++jm) {
                        const auto r = static_cast<Eigen::Index>(index(k, j));
                        const auto c = static_cast<Eigen::Index>(index(m, jm));
                        report.max_upper_fd = std::max(report.max_upper_fd, std::abs(fd(r, c)));
                        report.max_upper_analytic = std::max(report.max_upper_analytic, std::abs(jac(r, c)));
                    }
                }
            }
        }
        report.max_fd_analytic_gap = std::max(report.max_fd_analytic_gap, (fd - jac).cwiseAbs().maxCoeff());
        report.max_entry = std::max(report.max_entry, jac.cwiseAbs().maxCoeff());

        Eigen::MatrixXd power = Eigen::MatrixXd::Identity(jac.rows(), jac.cols());
        for (std::size_t p = 0; p < n; ++p) power = power * jac;
        report.max_power_entry = std::max(report.max_power_entry, power.cwiseAbs().maxCoeff());

        const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(jac.rows(), jac.cols()) - jac;
        const double det = shifted.partialPivLu().determinant();
        const double tr = jac.trace();
        // Keep the probe farthest from the ideal values.
        if (probe == 0 || std::abs(det - 1.0) > std::abs(report.det_i_minus_j - 1.0)) report.det_i_minus_j = det;
        if (probe == 0 || std::abs(tr) > std::abs(report.trace)) report.trace = tr;
        const double det2 = det * std::exp(tr);
        if (probe == 0 || std::abs(det2 - 1.0) > std::abs(report.det2 - 1.0)) report.det2 = det2;
    }
    return report;
}

ModeArray convolve(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& f) {
    if (f.modes() != spec.modes() || f.columns() < grid.steps()) {
        throw DimensionError("convolve: forcing does not match operator and grid");
    }
    const auto steps = pair_steps(spec, grid.dt());
    ModeArray u(spec.modes(), grid.nodes());
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        for (std::size_t k = 0; k < grid.steps(); ++k) {
            u(j, k + 1) = steps[j].decay * u(j, k) + steps[j].phi1_dt * f(j, k);
        }
    }
    return u;
}

RegularityReport regularity_check(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& f) {
    check_path(spec, grid, f, "regularity_check");
    const ModeArray u = convolve(spec, grid, f);
    const double dt = grid.dt();
    const std::size_t n = grid.steps();
    double f_sq = 0.0, du_sq = 0.0, au_sq = 0.0, terminal_sq = 0.0;
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        const double lambda = spec.eigenvalue(j);
        for (std::size_t k = 0; k <= n; ++k) {
            const double w = (k == 0 || k == n) ? 0.5 * dt : dt;
            f_sq += w * f(j, k) * f(j, k);
            au_sq += w * lambda * lambda * u(j, k) * u(j, k);
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double slope = (u(j, k + 1) - u(j, k)) / dt;
            du_sq += dt * slope * slope;
        }
        terminal_sq += lambda * u(j, n) * u(j, n);
    }
    RegularityReport r;
    r.f_l2 = std::sqrt(f_sq);
    r.u_prime_l2 = std::sqrt(du_sq);
    r.au_l2 = std::sqrt(au_sq);
    r.terminal_ratio = r.f_l2 > 0.0 ? std::sqrt(terminal_sq) / r.f_l2 : 0.0;
    r.slack = 1.0 + 10.0 * dt;
    r.derivative_bound_holds = r.u_prime_l2 <= 2.0 * r.f_l2 * r.slack;
    r.operator_bound_holds = r.au_l2 <= r.f_l2 * r.slack;
    return r;
}

}  // namespace mg
