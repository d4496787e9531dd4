#include "mildgirsanov/stationary_measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "mildgirsanov/log.hpp"

namespace mg {

namespace {

void require_white(const OperatorSpec& spec, const char* what) {
    if (spec.epsilon() != 0.0) {
        throw std::invalid_argument(std::string(what) + " supports white noise only (epsilon = 0)");
    }
}

void require_window_drift(const DriftSpec& drift, const char* what) {
    if (!drift.sup_bound && drift.kind != DriftKind::linear) {
        throw std::invalid_argument(std::string(what) + " needs a bounded or linear drift");
    }
}

}  // namespace

WindowGrid make_window(const OperatorSpec& spec, const DriftSpec& drift, double length, std::size_t steps) {
    WindowGrid w{TimeGrid(length, steps, -length), 0.0};
    const double tail = std::exp(-spec.omega() * length) / spec.omega();
    if (drift.sup_bound) {
        w.truncation_bound = *drift.sup_bound * tail;
    } else if (drift.kind == DriftKind::linear) {
        double rms = 0.0;
        for (double lambda : spec.eigenvalues()) rms += 1.0 / (2.0 * lambda);
        w.truncation_bound = std::abs(drift.coefficient) * std::sqrt(rms) * tail;
    } else {
        w.truncation_bound = std::numeric_limits<double>::infinity();
    }
    return w;
}

std::size_t stationary_normals(const OperatorSpec& spec, const WindowGrid& window) noexcept {
    return spec.modes() + normals_per_path(spec, window.grid);
}

StationarySample sample_stationary(const OperatorSpec& spec, const WindowGrid& window,
                                   std::span<const double> std_normals) {
    require_white(spec, "sample_stationary");
    const std::size_t d = spec.modes();
    const std::size_t n = window.grid.steps();
    if (std_normals.size() < stationary_normals(spec, window)) {
        throw std::invalid_argument("sample_stationary: not enough normals for the window");
    }
    ModeVector initial(d);
    for (std::size_t j = 0; j < d; ++j) initial[j] = std_normals[j] / std::sqrt(2.0 * spec.eigenvalue(j));
    std::vector<double> forward(2 * d * n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t from = d + 2 * d * (n - 1 - k);
        std::copy_n(std_normals.begin() + static_cast<std::ptrdiff_t>(from), 2 * d,
                    forward.begin() + static_cast<std::ptrdiff_t>(2 * d * k));
    }
    GaussianPathSample s = sample_from(spec, window.grid, initial, forward);
    return {std::move(s.h), std::move(s.db), 0, 0};
}

StationarySample sample_stationary(const OperatorSpec& spec, const WindowGrid& window, std::uint64_t master_seed,
                                   std::uint64_t index) {
    std::vector<double> xi(stationary_normals(spec, window));
    NormalStream stream(master_seed, StreamTag::stationary, index);
    stream.fill_normal(xi);
    StationarySample s = sample_stationary(spec, window, xi);
    s.seed = master_seed;
    s.index = index;
    return s;
}

WeightedSample log_weight_inf(const OperatorSpec& spec, const DriftSpec& drift, const StationarySample& sample,
                              const WindowGrid& window) {
    require_window_drift(drift, "log_weight_inf");
    const ModeVector origin(spec.modes(), 0.0);
    GaussianPathSample as_path{sample.h, sample.db, sample.seed, sample.index};
    return log_weight(spec, drift, origin, as_path, window.grid);
}

PathFunctional at_origin(StateFunction phi) { return at_terminal(std::move(phi)); }

SampleTable stationary_table(const OperatorSpec& spec, const DriftSpec& drift, const WindowGrid& window,
                             std::span<const PathFunctional> functionals, const McOptions& mc) {
    require_white(spec, "stationary_table");
    require_window_drift(drift, "stationary_table");
    drift.validate(spec);
    if (window.truncation_bound > 1e-6) {
        std::ostringstream os;
        os << "window truncation bound " << window.truncation_bound << " exceeds 1e-6 (S = " << window.length()
           << ")";
        warn(os.str());
    }
    SampleTable table;
    table.log_weights.assign(mc.samples, 0.0);
    table.ito_gamma.assign(mc.samples, 0.0);
    table.gamma_l2_sq.assign(mc.samples, 0.0);
    table.cm_sq.assign(mc.samples, 0.0);
    table.values.assign(functionals.size(), std::vector<double>(mc.samples, 0.0));
    parallel_for(mc.samples, mc.workers, [&](std::size_t i) {
        const StationarySample s = sample_stationary(spec, window, mc.seed, i);
        const WeightedSample w = log_weight_inf(spec, drift, s, window);
        table.log_weights[i] = w.log_weight;
        table.ito_gamma[i] = w.ito_gamma;
        table.gamma_l2_sq[i] = w.gamma_l2_sq;
        table.cm_sq[i] = w.cm_sq;
        for (std::size_t f = 0; f < functionals.size(); ++f) table.values[f][i] = functionals[f](window.grid, s.h);
    });
    return table;
}

Estimate invariant_estimate(const OperatorSpec& spec, const DriftSpec& drift, const WindowGrid& window,
                            const StateFunction& phi, const McOptions& mc) {
    const PathFunctional fns[] = {at_origin(phi)};
    const SampleTable t = stationary_table(spec, drift, window, fns, mc);
    return table_mean(t, 0, true);
}

std::vector<Estimate> long_run_oracle(const OperatorSpec& spec, const DriftSpec& drift,
                                      std::span<const StateFunction> phis, const LongRunOptions& options) {
    if (!drift.dissipative) throw std::invalid_argument("long_run_oracle needs a dissipative drift");
    if (!(options.dt > 0.0) || options.chains < 2) {
        throw std::invalid_argument("long_run_oracle needs dt > 0 and at least two chains");
    }
    drift.validate(spec);
    const std::size_t d = spec.modes();
    const auto burn = static_cast<std::size_t>(std::llround(options.burn_in / options.dt));
    const auto avg = static_cast<std::size_t>(std::llround(options.averaging / options.dt));
    if (avg == 0) throw std::invalid_argument("long_run_oracle: averaging window shorter than one step");
    const auto steps = pair_steps(spec, options.dt);
    std::vector<std::vector<double>> per_chain(phis.size(), std::vector<double>(options.chains));
    parallel_for(options.chains, options.workers, [&](std::size_t c) {
        NormalStream stream(options.seed, StreamTag::long_run, c);
        ModeVector z(d, 0.0), f(d);
        std::vector<double> sums(phis.size(), 0.0);
        for (std::size_t k = 0; k < burn + avg; ++k) {
            if (k >= burn) {
                for (std::size_t p = 0; p < phis.size(); ++p) sums[p] += phis[p](z);
            }
            drift_eval_into(drift, z, f);
            for (std::size_t j = 0; j < d; ++j) {
                const PairStep& s = steps[j];
                const double eta = std::sqrt(s.var_eta) * stream.normal();
                z[j] = s.decay * z[j] + s.phi1_dt * f[j] + s.noise_scale * eta;
            }
        }
        for (std::size_t p = 0; p < phis.size(); ++p) per_chain[p][c] = sums[p] / static_cast<double>(avg);
    });
    std::vector<Estimate> out;
    out.reserve(phis.size());
    for (const auto& v : per_chain) out.push_back(mean_estimate(v));
    return out;
}

DensityRatioPoint nadaraya_watson(std::span<const double> abscissae, std::span<const double> weights, double x,
                                  double bandwidth) {
    std::vector<double> k(abscissae.size()), kw(abscissae.size()), k2(abscissae.size());
    for (std::size_t i = 0; i < abscissae.size(); ++i) {
        const double u = (abscissae[i] - x) / bandwidth;
        k[i] = std::exp(-0.5 * u * u);
        kw[i] = k[i] * weights[i];
        k2[i] = k[i] * k[i];
    }
    const double ks = compensated_sum(k);
    DensityRatioPoint p;
    p.x = x;
    p.psi = ks > 0.0 ? compensated_sum(kw) / ks : 0.0;
    const double k2s = compensated_sum(k2);
    p.local_count = k2s > 0.0 ? ks * ks / k2s : 0.0;
    return p;
}

double silverman_bandwidth(std::span<const double> abscissae) {
    const Estimate e = mean_estimate(abscissae);
    const double sd = e.std_error * std::sqrt(static_cast<double>(e.n));
    std::vector<double> sorted(abscissae.begin(), abscissae.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(sorted.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    const double spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(static_cast<double>(abscissae.size()), -0.2);
}

DensityRatioProfile density_ratio_estimate(const OperatorSpec& spec, const DriftSpec& drift,
                                           const WindowGrid& window, std::span<const double> eval_points,
                                           std::optional<double> bandwidth, const McOptions& mc,
                                           std::size_t normalization_points) {
    const PathFunctional fns[] = {[](const TimeGrid& grid, const ModeArray& h) { return h(0, grid.steps()); }};
    const SampleTable t = stationary_table(spec, drift, window, fns, mc);
    const auto& abscissae = t.values[0];
    const std::vector<double> w = t.weights();
    DensityRatioProfile profile;
    profile.bandwidth = bandwidth.value_or(silverman_bandwidth(abscissae));
    if (!(profile.bandwidth > 0.0)) throw std::invalid_argument("density ratio bandwidth must be positive");
    for (double x : eval_points) {
        profile.points.push_back(nadaraya_watson(abscissae, w, x, profile.bandwidth));
        if (profile.points.back().local_count < 50.0) {
            std::ostringstream os;
            os << "density ratio at x = " << x << " rests on an effective local count of "
               << profile.points.back().local_count;
            warn(os.str());
        }
    }
    const std::size_t k = std::min(normalization_points, abscissae.size());
    std::vector<double> psi_at_mu(k);
    parallel_for(k, mc.workers, [&](std::size_t i) {
        psi_at_mu[i] = nadaraya_watson(abscissae, w, abscissae[i], profile.bandwidth).psi;
    });
    profile.normalization = mean_estimate(psi_at_mu);
    return profile;
}

double linear_density_ratio(const OperatorSpec& spec, double c, double x) {
    const double lambda = spec.eigenvalue(0);
    return std::sqrt((lambda - c) / lambda) * std::exp(c * x * x);
}

LinearInvariantOracle linear_invariant_variance(const OperatorSpec& spec, double c, std::size_t mode, double dt) {
    const double lambda = spec.eigenvalue(mode);
    if (!(lambda - c > 0.0)) throw std::invalid_argument("linear invariant oracle needs c < lambda");
    const PairStep p = pair_steps(spec, dt)[mode];
    const double r = p.decay + c * p.phi1_dt;
    return {1.0 / (2.0 * (lambda - c)), p.var_eta / (1.0 - r * r)};
}

}  // namespace mg
