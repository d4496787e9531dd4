#include "mildgirsanov/path_space.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mg {

TimeGrid::TimeGrid(double horizon, std::size_t steps, double start)
    : horizon_(horizon), steps_(steps), dt_(0.0), start_(start) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("time grid horizon must be positive");
    }
    if (steps < 2) throw std::invalid_argument("time grid needs at least 2 steps");
    dt_ = horizon / static_cast<double>(steps);
}

ModeVector ModeArray::column(std::size_t k) const {
    ModeVector v(modes_);
    for (std::size_t j = 0; j < modes_; ++j) v[j] = (*this)(j, k);
    return v;
}

void ModeArray::set_column(std::size_t k, std::span<const double> v) {
    for (std::size_t j = 0; j < modes_; ++j) (*this)(j, k) = v[j];
}

double phi1(double z) noexcept {
    if (std::abs(z) < 1e-8) return 1.0 - 0.5 * z;
    return -std::expm1(-z) / z;
}

std::vector<PairStep> pair_steps(const OperatorSpec& spec, double dt) {
    std::vector<PairStep> steps(spec.modes());
    const double sqrt_dt = std::sqrt(dt);
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        const double lambda = spec.eigenvalue(j);
        const double z = lambda * dt;
        PairStep& p = steps[j];
        p.decay = std::exp(-z);
        double schur;
        if (z < 1e-4) {
            p.var_eta = dt * (1.0 - z + 2.0 * z * z / 3.0);
            p.cov = dt * (1.0 - 0.5 * z + z * z / 6.0);
            schur = dt * z * z * (1.0 - z) / 12.0;
        } else {
            p.var_eta = -std::expm1(-2.0 * z) / (2.0 * lambda);
            p.cov = -std::expm1(-z) / lambda;
            schur = p.var_eta - p.cov * p.cov / dt;
        }
        if (schur < -1e-14 * p.var_eta) {
            std::ostringstream os;
            os << "pair covariance is not positive semidefinite for mode " << j
               << " (lambda dt = " << z << ", Schur complement " << schur << ")";
            throw std::domain_error(os.str());
        }
        p.db_scale = sqrt_dt;
        p.eta_from_first = p.cov / sqrt_dt;
        p.eta_from_second = std::sqrt(std::max(schur, 0.0));
        p.noise_scale = spec.epsilon() == 0.0 ? 1.0 : std::pow(lambda, -0.5 * spec.epsilon());
        p.phi1_dt = p.cov;
    }
    return steps;
}

std::size_t normals_per_path(const OperatorSpec& spec, const TimeGrid& grid) noexcept {
    return 2 * spec.modes() * grid.steps();
}

GaussianPathSample sample_from(const OperatorSpec& spec, const TimeGrid& grid,
                               std::span<const double> initial, std::span<const double> std_normals) {
    require_modes(spec, initial, "sample_from");
    const std::size_t d = spec.modes();
    const std::size_t n = grid.steps();
    if (std_normals.size() < 2 * d * n) {
        throw std::invalid_argument("sample_convolution: not enough normals for the grid");
    }
    const auto steps = pair_steps(spec, grid.dt());
    GaussianPathSample out;
    out.h = ModeArray(d, n + 1);
    out.db = ModeArray(d, n);
    for (std::size_t j = 0; j < d; ++j) out.h(j, 0) = initial[j];
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            const PairStep& p = steps[j];
            const double xi1 = std_normals[2 * (k * d + j)];
            const double xi2 = std_normals[2 * (k * d + j) + 1];
            const double eta = p.eta_from_first * xi1 + p.eta_from_second * xi2;
            out.db(j, k) = p.db_scale * xi1;
            out.h(j, k + 1) = p.decay * out.h(j, k) + p.noise_scale * eta;
        }
    }
    return out;
}

GaussianPathSample sample_convolution(const OperatorSpec& spec, const TimeGrid& grid,
                                      std::span<const double> std_normals) {
    const ModeVector zero(spec.modes(), 0.0);
    return sample_from(spec, grid, zero, std_normals);
}

GaussianPathSample sample_convolution(const OperatorSpec& spec, const TimeGrid& grid,
                                      std::uint64_t master_seed, std::uint64_t index) {
    std::vector<double> xi(normals_per_path(spec, grid));
    NormalStream stream(master_seed, StreamTag::path, index);
    stream.fill_normal(xi);
    GaussianPathSample s = sample_convolution(spec, grid, xi);
    s.seed = master_seed;
    s.index = index;
    return s;
}

ModeArray reconstruct_increments(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& h) {
    ModeArray db(h.modes(), grid.steps());
    for (std::size_t j = 0; j < h.modes(); ++j) {
        const double lambda = spec.eigenvalue(j);
        const double scale = spec.epsilon() == 0.0 ? 1.0 : std::pow(lambda, 0.5 * spec.epsilon());
        for (std::size_t k = 0; k < grid.steps(); ++k) {
            db(j, k) = scale * (h(j, k + 1) - h(j, k) + lambda * h(j, k) * grid.dt());
        }
    }
    return db;
}

double CovarianceKernel::mode(std::size_t j, double t, double s) const {
    const double lambda = spec_.eigenvalue(j);
    const double color = spec_.epsilon() == 0.0 ? 1.0 : std::pow(lambda, -spec_.epsilon());
    // e^{-lambda|t-s|} - e^{-lambda(t+s)} = e^{-lambda|t-s|} (1 - e^{-2 lambda min(t,s)})
    const double lo = std::min(t, s);
    return color * std::exp(-lambda * std::abs(t - s)) * (-std::expm1(-2.0 * lambda * lo)) /
           (2.0 * lambda);
}

ModeVector CovarianceKernel::operator()(double t, double s) const {
    ModeVector out(spec_.modes());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = mode(j, t, s);
    return out;
}

ModeVector kernel_eval(const CovarianceKernel& kernel, double t, double s) { return kernel(t, s); }

double convolution_variance(const OperatorSpec& spec, std::size_t j, double t) {
    return CovarianceKernel(spec).mode(j, t, t);
}

CovarianceReport empirical_covariance_check(const OperatorSpec& spec, const TimeGrid& grid,
                                            std::span<const std::size_t> node_set,
                                            const McOptions& mc) {
    for (std::size_t k : node_set) {
        if (k > grid.steps()) throw std::invalid_argument("covariance check: node outside grid");
    }
    const std::size_t d = spec.modes();
    const std::size_t m = node_set.size();
    const std::size_t pair_count = d * m * m;
    const std::size_t cross_count = d > 1 ? m : 0;
    // products[i][p]: per-sample products for every (mode, a, b) and the cross-mode pairs.
    std::vector<std::vector<double>> products(pair_count + cross_count, std::vector<double>(mc.samples));
    parallel_for(mc.samples, mc.workers, [&](std::size_t i) {
        const GaussianPathSample s = sample_convolution(spec, grid, mc.seed, i);
        std::size_t p = 0;
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t a = 0; a < m; ++a) {
                for (std::size_t b = 0; b < m; ++b) {
                    products[p++][i] = s.h(j, node_set[a]) * s.h(j, node_set[b]);
                }
            }
        }
        for (std::size_t a = 0; a < cross_count; ++a) {
            products[p++][i] = s.h(0, node_set[a]) * s.h(1, node_set[a]);
        }
    });

    const CovarianceKernel kernel(spec);
    CovarianceReport report;
    report.samples = mc.samples;
    std::size_t p = 0;
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                const Estimate e = mean_estimate(products[p++]);
                CovarianceEntry entry{j, node_set[a], node_set[b], e.value,
                                      kernel.mode(j, grid.node(node_set[a]), grid.node(node_set[b])),
                                      e.std_error};
                const double dev = std::abs(entry.sample - entry.exact);
                report.max_deviation = std::max(report.max_deviation, dev);
                if (entry.std_error > 0.0) report.max_z = std::max(report.max_z, dev / entry.std_error);
                report.entries.push_back(entry);
            }
        }
    }
    for (std::size_t a = 0; a < cross_count; ++a) {
        const Estimate e = mean_estimate(products[p++]);
        if (e.std_error > 0.0) {
            report.max_cross_mode_z = std::max(report.max_cross_mode_z, std::abs(e.value) / e.std_error);
        }
    }
    return report;
}

PrecisionResidual precision_residual(const OperatorSpec& spec, const TimeGrid& grid, const ModeArray& h) {
    if (spec.epsilon() != 0.0) {
        throw std::invalid_argument("precision_residual is defined for white noise only (epsilon = 0)");
    }
    if (grid.steps() < 16) throw std::invalid_argument("precision_residual needs N >= 16");
    if (h.modes() != spec.modes() || h.columns() != grid.nodes()) {
        throw DimensionError("precision_residual: test path does not match operator and grid");
    }
    const std::size_t d = spec.modes();
    const std::size_t n = grid.steps();
    const double dt = grid.dt();
    const CovarianceKernel kernel(spec);
    ModeArray f(d, n + 1);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t a = 0; a <= n; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b <= n; ++b) {
                const double w = (b == 0 || b == n) ? 0.5 : 1.0;
                acc += w * kernel.mode(j, grid.node(a), grid.node(b)) * h(j, b);
            }
            f(j, a) = acc * dt;
        }
    }
    PrecisionResidual out;
    double res_sq = 0.0;
    double h_sq = 0.0;
    double init_sq = 0.0;
    double term_sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double lambda = spec.eigenvalue(j);
        for (std::size_t a = 1; a < n; ++a) {
            const double second = (f(j, a + 1) - 2.0 * f(j, a) + f(j, a - 1)) / (dt * dt);
            const double r = second - lambda * lambda * f(j, a) + h(j, a);
            res_sq += r * r;
            h_sq += h(j, a) * h(j, a);
        }
        init_sq += f(j, 0) * f(j, 0);
        const double slope = (f(j, n) - f(j, n - 1)) / dt;
        const double defect = slope + lambda * f(j, n);
        term_sq += defect * defect;
    }
    out.relative_residual = h_sq > 0.0 ? std::sqrt(res_sq / h_sq) : std::sqrt(res_sq);
    out.initial_defect = std::sqrt(init_sq);
    out.terminal_defect = std::sqrt(term_sq);
    return out;
}

SobolevBound sobolev_moment_bound(const OperatorSpec& spec, const TimeGrid& grid, const McOptions& mc) {
    if (spec.epsilon() != 0.0) {
        throw std::invalid_argument("sobolev_moment_bound is defined for white noise only (epsilon = 0)");
    }
    const std::size_t d = spec.modes();
    const std::size_t n = grid.steps();
    std::vector<double> weight(d);
    for (std::size_t j = 0; j < d; ++j) weight[j] = std::pow(spec.eigenvalue(j), spec.beta());
    std::vector<double> per_sample(mc.samples);
    parallel_for(mc.samples, mc.workers, [&](std::size_t i) {
        const GaussianPathSample s = sample_convolution(spec, grid, mc.seed, i);
        double acc = 0.0;
        for (std::size_t k = 0; k <= n; ++k) {
            double norm = 0.0;
            for (std::size_t j = 0; j < d; ++j) norm += weight[j] * s.h(j, k) * s.h(j, k);
            acc += ((k == 0 || k == n) ? 0.5 : 1.0) * norm;
        }
        per_sample[i] = acc * grid.dt();
    });
    SobolevBound out;
    out.lhs = mean_estimate(per_sample);
    out.rhs = 0.5 * grid.horizon() * trace_diagnostic(spec).trace_value;
    const double T = grid.horizon();
    for (std::size_t j = 0; j < d; ++j) {
        const double lambda = spec.eigenvalue(j);
        out.exact += weight[j] * (T / (2.0 * lambda) + std::expm1(-2.0 * lambda * T) / (4.0 * lambda * lambda));
    }
    return out;
}

}  // namespace mg
