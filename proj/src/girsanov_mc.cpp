#include "mildgirsanov/girsanov_mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mildgirsanov/log.hpp"

namespace mg {

NamedFunctional terminal_coordinate(std::size_t mode) {
    return {"terminal_coordinate_" + std::to_string(mode + 1),
            [mode](const TimeGrid& grid, const ModeArray& z) { return z(mode, grid.steps()); }};
}

NamedFunctional terminal_square(std::size_t mode) {
    return {"terminal_square_" + std::to_string(mode + 1), [mode](const TimeGrid& grid, const ModeArray& z) {
                const double v = z(mode, grid.steps());
                return v * v;
            }};
}

NamedFunctional terminal_squared_norm() {
    return {"terminal_squared_norm", [](const TimeGrid& grid, const ModeArray& z) {
                double acc = 0.0;
                for (std::size_t j = 0; j < z.modes(); ++j) acc += z(j, grid.steps()) * z(j, grid.steps());
                return acc;
            }};
}

NamedFunctional running_sup(std::size_t mode) {
    return {"running_sup_" + std::to_string(mode + 1), [mode](const TimeGrid&, const ModeArray& z) {
                const auto row = z.row(mode);
                return *std::max_element(row.begin(), row.end());
            }};
}

NamedFunctional time_average(std::size_t mode) {
    return {"time_average_" + std::to_string(mode + 1), [mode](const TimeGrid& grid, const ModeArray& z) {
                const auto row = z.row(mode);
                double acc = 0.5 * (row.front() + row.back());
                for (std::size_t k = 1; k + 1 < row.size(); ++k) acc += row[k];
                return acc * grid.dt() / grid.horizon();
            }};
}

std::vector<NamedFunctional> builtin_functionals() {
    return {terminal_coordinate(0), terminal_squared_norm(), running_sup(0), time_average(0)};
}

PathFunctional at_terminal(StateFunction phi) {
    return [phi = std::move(phi)](const TimeGrid& grid, const ModeArray& z) {
        const ModeVector state = z.column(grid.steps());
        return phi(state);
    };
}

WeightedSample log_weight(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const GaussianPathSample& sample, const TimeGrid& grid, const WeightOptions& options) {
    if (options.require_sup_bound) drift.require_sup_bound("the enabled moment-bound assertions");
    const GammaPath g = gamma(spec, drift, x, sample.h, grid);
    const CMNormReport cm = cm_norm_sq(spec, grid, g.gamma.values, g.drift.values);
    WeightedSample w;
    w.cm_sq = cm.drift_l2_sq;
    w.cm_direct_sq = cm.direct_sq;
    w.ito = ito_integral(g.drift.values, sample.db, spec);
    w.ito_gamma = ito_integral(g.gamma.values, sample.db, spec);
    double l2 = 0.0;
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        const double color = spec.epsilon() == 0.0 ? 1.0 : std::pow(spec.eigenvalue(j), spec.epsilon());
        double acc = 0.0;
        for (std::size_t k = 0; k < grid.steps(); ++k) acc += g.gamma.values(j, k) * g.gamma.values(j, k);
        l2 += color * acc * grid.dt();
    }
    w.gamma_l2_sq = l2;
    w.log_weight = -0.5 * w.cm_sq + w.ito;
    w.seed = sample.seed;
    w.index = sample.index;
    return w;
}

std::vector<double> SampleTable::weights() const {
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
    return w;
}

namespace {

SampleTable make_table(std::size_t functionals, std::size_t samples) {
    SampleTable t;
    t.log_weights.assign(samples, 0.0);
    t.ito_gamma.assign(samples, 0.0);
    t.gamma_l2_sq.assign(samples, 0.0);
    t.cm_sq.assign(samples, 0.0);
    t.values.assign(functionals, std::vector<double>(samples, 0.0));
    return t;
}

void warn_if_degenerate(const Estimate& e, const char* what) {
    if (e.n > 0 && e.ess / static_cast<double>(e.n) < 0.05) {
        std::ostringstream os;
        os << what << ": effective sample size " << e.ess << " of " << e.n << " (weight degeneracy)";
        warn(os.str());
    }
}

}  // namespace

SampleTable weighted_table(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                           const TimeGrid& grid, std::span<const PathFunctional> functionals,
                           const McOptions& mc) {
    drift.validate(spec);
    require_modes(spec, x, "weighted_table");
    const ModeArray free = free_evolution(spec, grid, x);
    SampleTable table = make_table(functionals.size(), mc.samples);
    parallel_for(mc.samples, mc.workers, [&](std::size_t i) {
        const GaussianPathSample s = sample_convolution(spec, grid, mc.seed, i);
        const WeightedSample w = log_weight(spec, drift, x, s, grid);
        table.log_weights[i] = w.log_weight;
        table.ito_gamma[i] = w.ito_gamma;
        table.gamma_l2_sq[i] = w.gamma_l2_sq;
        table.cm_sq[i] = w.cm_sq;
        ModeArray z = s.h;
        auto zf = z.flat();
        const auto ff = free.flat();
        for (std::size_t q = 0; q < zf.size(); ++q) zf[q] += ff[q];
        for (std::size_t f = 0; f < functionals.size(); ++f) table.values[f][i] = functionals[f](grid, z);
    });
    return table;
}

ModeArray simulate_direct(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                          const TimeGrid& grid, std::span<const double> std_normals) {
    const std::size_t d = spec.modes();
    const std::size_t n = grid.steps();
    if (std_normals.size() < 2 * d * n) throw std::invalid_argument("simulate_direct: not enough normals");
    const auto steps = pair_steps(spec, grid.dt());
    const ModeArray free = free_evolution(spec, grid, x);
    ModeArray k(d, n + 1);
    ModeVector z(d), f(d);
    for (std::size_t m = 0; m < n; ++m) {
        for (std::size_t j = 0; j < d; ++j) z[j] = k(j, m) + free(j, m);
        drift_eval_into(drift, z, f);
        for (std::size_t j = 0; j < d; ++j) {
            const PairStep& p = steps[j];
            const double eta = p.eta_from_first * std_normals[2 * (m * d + j)] +
                               p.eta_from_second * std_normals[2 * (m * d + j) + 1];
            k(j, m + 1) = p.decay * k(j, m) + p.phi1_dt * f[j] + p.noise_scale * eta;
        }
    }
    return k;
}

SampleTable direct_table(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                         const TimeGrid& grid, std::span<const PathFunctional> functionals,
                         const McOptions& mc) {
    drift.validate(spec);
    require_modes(spec, x, "direct_table");
    const ModeArray free = free_evolution(spec, grid, x);
    SampleTable table = make_table(functionals.size(), mc.samples);
    parallel_for(mc.samples, mc.workers, [&](std::size_t i) {
        std::vector<double> xi(normals_per_path(spec, grid));
        NormalStream stream(mc.seed, StreamTag::path, i);
        stream.fill_normal(xi);
        ModeArray z = simulate_direct(spec, drift, x, grid, xi);
        auto zf = z.flat();
        const auto ff = free.flat();
        for (std::size_t q = 0; q < zf.size(); ++q) zf[q] += ff[q];
        for (std::size_t f = 0; f < functionals.size(); ++f) table.values[f][i] = functionals[f](grid, z);
    });
    return table;
}

Estimate table_mean(const SampleTable& table, std::size_t functional, bool weighted, bool self_normalized) {
    const auto& values = table.values.at(functional);
    if (!weighted) return mean_estimate(values);
    const std::vector<double> w = table.weights();
    Estimate e = self_normalized ? self_normalized_estimate(values, w) : weighted_mean_estimate(values, w);
    warn_if_degenerate(e, "weighted estimate");
    return e;
}

Estimate table_variance(const SampleTable& table, std::size_t functional, bool weighted) {
    const auto& values = table.values.at(functional);
    if (!weighted) return variance_estimate(values, {});
    const std::vector<double> w = table.weights();
    return variance_estimate(values, w);
}

Estimate weighted_expectation(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                              const TimeGrid& grid, const PathFunctional& phi, const GirsanovOptions& options) {
    const PathFunctional fns[] = {phi};
    const SampleTable t = weighted_table(spec, drift, x, grid, fns, options.mc);
    return table_mean(t, 0, true, options.self_normalized);
}

Estimate direct_expectation(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                            const TimeGrid& grid, const PathFunctional& phi, const McOptions& mc) {
    const PathFunctional fns[] = {phi};
    const SampleTable t = direct_table(spec, drift, x, grid, fns, mc);
    return table_mean(t, 0, false);
}

SemigroupComparison semigroup_compare(const OperatorSpec& spec, const DriftSpec& drift,
                                      std::span<const double> x, const TimeGrid& grid,
                                      const StateFunction& phi, const McOptions& mc) {
    const PathFunctional terminal = at_terminal(phi);
    return {direct_expectation(spec, drift, x, grid, terminal, mc),
            weighted_expectation(spec, drift, x, grid, terminal, {mc, false})};
}

Estimate weight_moment(std::span<const double> log_weights, int order) {
    if (log_weights.empty()) throw std::invalid_argument("weight_moment: no samples");
    const double n = static_cast<double>(order);
    double shift = -std::numeric_limits<double>::infinity();
    for (double l : log_weights) shift = std::max(shift, n * l);
    std::vector<double> scaled(log_weights.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = std::exp(n * log_weights[i] - shift);
    Estimate e = mean_estimate(scaled);
    const double factor = std::exp(shift);
    e.value *= factor;
    e.std_error *= factor;
    std::vector<double> w(log_weights.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i]);
    e.ess = effective_sample_size(w);
    return e;
}

MomentBoundTable moment_bound_suite(const OperatorSpec& spec, const DriftSpec& drift, std::span<const double> x,
                                    const TimeGrid& grid, std::span<const int> orders, const McOptions& mc) {
    const double sup = drift.require_sup_bound("moment_bound_suite");
    const SampleTable t = weighted_table(spec, drift, x, grid, {}, mc);
    MomentBoundTable out;
    for (int n : orders) {
        if (n < 1) throw std::invalid_argument("moment orders must be >= 1");
        MomentRow row;
        row.order = n;
        row.moment = weight_moment(t.log_weights, n);
        row.bound = std::exp(static_cast<double>(n * n - n) * sup * sup);
        const double rel_se = row.moment.value > 0.0 ? row.moment.std_error / row.moment.value : 0.0;
        row.holds = row.moment.value <= row.bound * (1.0 + 3.0 * rel_se);
        out.rows.push_back(row);
    }
    std::vector<double> sq(t.ito_gamma.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = t.ito_gamma[i] * t.ito_gamma[i];
    out.ito_gamma_sq = mean_estimate(sq);
    out.ito_bound = grid.horizon() / (2.0 * spec.omega()) * sup * sup;
    const double rel = out.ito_gamma_sq.value > 0.0 ? out.ito_gamma_sq.std_error / out.ito_gamma_sq.value : 0.0;
    out.ito_holds = out.ito_gamma_sq.value <= out.ito_bound * (1.0 + 3.0 * rel);
    out.cm_sq = mean_estimate(t.cm_sq);
    out.cm_stated_bound = 2.0 * sup * sup;
    out.cm_max = *std::max_element(t.cm_sq.begin(), t.cm_sq.end());
    if (out.cm_max > out.cm_stated_bound) {
        std::ostringstream os;
        os << "Cameron-Martin norm " << out.cm_max << " exceeds 2 sup|b|^2 = " << out.cm_stated_bound
           << " (the identity only gives T sup|b|^2)";
        warn(os.str());
    }
    return out;
}

LinearOuOracle linear_ou_terminal(const OperatorSpec& spec, double c, std::span<const double> x,
                                  const TimeGrid& grid, std::size_t mode) {
    const double lambda = spec.eigenvalue(mode);
    const double shifted = lambda - c;
    if (!(shifted > 0.0)) throw std::invalid_argument("linear oracle needs c < lambda");
    const double color = spec.epsilon() == 0.0 ? 1.0 : std::pow(lambda, -spec.epsilon());
    const double T = grid.horizon();
    LinearOuOracle o;
    o.mean = std::exp(-shifted * T) * x[mode];
    o.variance = color * (-std::expm1(-2.0 * shifted * T)) / (2.0 * shifted);
    const PairStep p = pair_steps(spec, grid.dt())[mode];
    const double r = p.decay + c * p.phi1_dt;
    double m = x[mode];
    double v = 0.0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        m *= r;
        v = r * r * v + color * p.var_eta;
    }
    o.discrete_mean = m;
    o.discrete_variance = v;
    return o;
}

double zero_drift_characteristic(const OperatorSpec& spec, std::span<const double> x, std::span<const double> xi,
                                 double horizon) {
    const CovarianceKernel kernel(spec);
    double quad = 0.0;
    double phase = 0.0;
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        quad += xi[j] * xi[j] * kernel.mode(j, horizon, horizon);
        phase += xi[j] * std::exp(-spec.eigenvalue(j) * horizon) * x[j];
    }
    return std::exp(-0.5 * quad) * std::cos(phase);
}

}  // namespace mg
