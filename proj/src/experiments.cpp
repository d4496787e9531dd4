#include "mildgirsanov/experiments.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "mildgirsanov/girsanov_mc.hpp"
#include "mildgirsanov/log.hpp"
#include "mildgirsanov/mild_maps.hpp"
#include "mildgirsanov/stationary_measure.hpp"

namespace mg {

namespace {

McOptions mc_options(const ExperimentConfig& c) { return {c.samples, c.seed, c.workers}; }

double combined(const Estimate& a, const Estimate& b) {
    return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

std::string mode_name(std::size_t j) { return "mode_" + std::to_string(j + 1); }

std::vector<std::string> row(std::initializer_list<double> values) {
    std::vector<std::string> out;
    for (double v : values) out.push_back(csv_number(v));
    return out;
}

double require_bound(const DriftSpec& drift, const std::string& experiment) {
    try {
        return drift.require_sup_bound(experiment);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, "drift.kind", e.what());
    }
}

void require_white(const ExperimentConfig& c) {
    if (c.epsilon != 0.0) {
        throw ConfigError(0, "operator.epsilon", c.experiment + " is defined for white noise (epsilon = 0)");
    }
}

void require_window_drift(const ExperimentConfig& c) {
    if (c.drift_kind == DriftKind::linear || c.drift_kind == DriftKind::zero ||
        c.drift_kind == DriftKind::bounded_tanh) {
        return;
    }
    throw ConfigError(0, "drift.kind", c.experiment + " needs a bounded or linear drift");
}

// Lipschitz ratio max |g(z) - g(w)| / |z - w| over random pairs, g = (-A)^alpha b.
double lipschitz_ratio(const OperatorSpec& spec, const DriftSpec& drift, double alpha, std::size_t pairs,
                       std::uint64_t seed) {
    double worst = 0.0;
    const std::size_t d = spec.modes();
    for (std::size_t p = 0; p < pairs; ++p) {
        NormalStream s(seed, StreamTag::auxiliary, 1000000 + p);
        ModeVector z(d), w(d);
        const double spread = 0.1 + 3.0 * s.uniform();
        for (std::size_t j = 0; j < d; ++j) {
            z[j] = spread * s.normal();
            w[j] = z[j] + 0.5 * spread * s.normal();
        }
        const ModeVector gz = fractional_apply(spec, alpha, drift_eval(drift, z));
        const ModeVector gw = fractional_apply(spec, alpha, drift_eval(drift, w));
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            num += (gz[j] - gw[j]) * (gz[j] - gw[j]);
            den += (z[j] - w[j]) * (z[j] - w[j]);
        }
        if (den > 0.0) worst = std::max(worst, std::sqrt(num / den));
    }
    return worst;
}

// ---------------------------------------------------------------- girsanov

void girsanov_checks(const ExperimentConfig& c, RunReport& report) {
    const OperatorSpec spec = c.operator_spec();
    const DriftSpec drift = c.drift_spec();
    const ModeVector x = c.state();
    const TimeGrid grid(c.horizon, c.steps);
    const McOptions mc = mc_options(c);
    const std::size_t d = spec.modes();

    auto named = builtin_functionals();
    const std::size_t builtin_count = named.size();
    if (drift.kind == DriftKind::linear) {
        for (std::size_t j = 0; j < d; ++j) named.push_back(terminal_coordinate(j));
    }
    std::vector<PathFunctional> fns;
    for (const auto& n : named) fns.push_back(n.fn);

    const SampleTable weighted = weighted_table(spec, drift, x, grid, fns, mc);
    const SampleTable direct = direct_table(spec, drift, x, grid, fns, mc);
    const std::vector<double> rho = weighted.weights();

    Estimate norm = mean_estimate(rho);
    norm.ess = effective_sample_size(rho);
    report.checks.push_back(closeness_check("weight_normalization", norm, 1.0, 3.0 * norm.std_error));

    if (drift.kind == DriftKind::zero) {
        double max_log = 0.0, max_diff = 0.0;
        for (double l : weighted.log_weights) max_log = std::max(max_log, std::abs(l));
        for (std::size_t f = 0; f < builtin_count; ++f) {
            for (std::size_t i = 0; i < c.samples; ++i) {
                max_diff = std::max(max_diff, std::abs(weighted.values[f][i] - direct.values[f][i]));
            }
        }
        report.checks.push_back(closeness_check("zero_drift_unit_weights", max_log, 0.0, 0.0));
        report.checks.push_back(closeness_check("zero_drift_exact_agreement", max_diff, 0.0, 0.0));
    }

    Table agreement{"estimator_agreement",
                    {"functional", "weighted", "weighted_se", "direct", "direct_se", "gap", "combined_se", "ess"},
                    {}};
    for (std::size_t f = 0; f < builtin_count; ++f) {
        const Estimate w = table_mean(weighted, f, true, c.self_normalized);
        const Estimate dir = table_mean(direct, f, false);
        // The discrete weighted and direct estimators share one law, so no dt bias term.
        report.checks.push_back(closeness_check("agreement/" + named[f].name, w, dir.value, 3.0 * combined(w, dir)));
        auto r = row({w.value, w.std_error, dir.value, dir.std_error, w.value - dir.value, combined(w, dir), w.ess});
        r.insert(r.begin(), named[f].name);
        agreement.rows.push_back(r);
    }
    report.tables.push_back(agreement);

    if (drift.kind == DriftKind::linear) {
        Table oracle{"ou_oracle",
                     {"mode", "mean", "discrete_mean", "weighted_mean", "direct_mean", "variance",
                      "discrete_variance", "weighted_variance", "direct_variance"},
                     {}};
        for (std::size_t j = 0; j < d; ++j) {
            const std::size_t f = builtin_count + j;
            const LinearOuOracle o = linear_ou_terminal(spec, drift.coefficient, x, grid, j);
            const Estimate wm = table_mean(weighted, f, true);
            const Estimate dm = table_mean(direct, f, false);
            const Estimate wv = table_variance(weighted, f, true);
            const Estimate dv = table_variance(direct, f, false);
            const double mean_bias = std::abs(o.discrete_mean - o.mean);
            const double var_bias = std::abs(o.discrete_variance - o.variance);
            report.checks.push_back(
                closeness_check("ou_mean_weighted/" + mode_name(j), wm, o.mean, 3.0 * wm.std_error + mean_bias));
            report.checks.push_back(
                closeness_check("ou_mean_direct/" + mode_name(j), dm, o.mean, 3.0 * dm.std_error + mean_bias));
            report.checks.push_back(closeness_check("ou_variance_weighted/" + mode_name(j), wv, o.variance,
                                                    3.0 * wv.std_error + var_bias));
            report.checks.push_back(closeness_check("ou_variance_direct/" + mode_name(j), dv, o.variance,
                                                    3.0 * dv.std_error + var_bias));
            auto r = row({o.mean, o.discrete_mean, wm.value, dm.value, o.variance, o.discrete_variance, wv.value,
                          dv.value});
            r.insert(r.begin(), std::to_string(j + 1));
            oracle.rows.push_back(r);
        }
        report.tables.push_back(oracle);
    }

    report.checks.push_back(recorded("ess_fraction", norm.ess / static_cast<double>(c.samples)));
    report.checks.push_back(
        bound_check("drift_lipschitz_certificate", lipschitz_ratio(spec, drift, 0.0, 1000, c.seed),
                    drift.lipschitz_const));
    if (c.epsilon > 0.0) {
        const double constant = drift.lipschitz_const * std::pow(spec.eigenvalues().back(), c.epsilon);
        report.checks.push_back(bound_check("colored_lipschitz_certificate",
                                            lipschitz_ratio(spec, drift, c.epsilon, 1000, c.seed), constant));
    }

    if (c.dump_paths) {
        Table paths{"paths", {"sample_id", "mode", "node_index", "time", "h", "dB"}, {}};
        for (std::uint64_t i = 0; i < std::min<std::uint64_t>(4, c.samples); ++i) {
            const GaussianPathSample s = sample_convolution(spec, grid, c.seed, i);
            for (std::size_t j = 0; j < d; ++j) {
                for (std::size_t k = 0; k < grid.nodes(); ++k) {
                    paths.rows.push_back({std::to_string(i), std::to_string(j + 1), std::to_string(k),
                                          csv_number(grid.node(k)), csv_number(s.h(j, k)),
                                          k < grid.steps() ? csv_number(s.db(j, k)) : ""});
                }
            }
        }
        report.tables.push_back(paths);
    }
}

// ------------------------------------------------------------------ kernel

ModeArray trig_test_path(const OperatorSpec& spec, const TimeGrid& grid) {
    ModeArray h(spec.modes(), grid.nodes());
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        for (std::size_t k = 0; k < grid.nodes(); ++k) {
            const double s = grid.node(k) / grid.horizon();
            h(j, k) = std::sin(std::numbers::pi * s) + 0.25 * std::sin(3.0 * std::numbers::pi * s) / (1.0 + j);
        }
    }
    return h;
}

std::vector<std::size_t> six_nodes(std::size_t steps) {
    std::vector<std::size_t> nodes;
    for (std::size_t i = 1; i <= 6; ++i) nodes.push_back((steps * i + 3) / 6);
    return nodes;
}

void kernel_checks(const ExperimentConfig& c, RunReport& report) {
    const OperatorSpec spec = c.operator_spec();
    const TimeGrid grid(c.horizon, c.steps);
    const McOptions mc = mc_options(c);
    const auto nodes = six_nodes(c.steps);

    const CovarianceReport cov = empirical_covariance_check(spec, grid, nodes, mc);
    report.checks.push_back(bound_check("kernel_covariance_max_z", cov.max_z, 4.0));
    if (spec.modes() > 1) {
        report.checks.push_back(bound_check("kernel_cross_mode_max_z", cov.max_cross_mode_z, 4.0));
    }
    report.checks.push_back(recorded("kernel_covariance_max_deviation", cov.max_deviation));

    // Gram matrices of K_j at 12 pseudo-random nodes are PSD.
    const CovarianceKernel kernel(spec);
    double min_eig = std::numeric_limits<double>::infinity();
    NormalStream pick(c.seed, StreamTag::auxiliary, 42);
    std::vector<double> times(12);
    for (auto& t : times) t = grid.horizon() * pick.uniform();
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        Eigen::MatrixXd gram(12, 12);
        for (int a = 0; a < 12; ++a) {
            for (int b = 0; b < 12; ++b) gram(a, b) = kernel.mode(j, times[a], times[b]);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    report.checks.push_back(bound_check("kernel_gram_psd", -min_eig, 1e-10));

    Table slice{"kernel_slice", {"node", "time", "empirical", "kernel", "std_error"}, {}};
    LinePlot plot{"kernel_slice", "K_1(T, s): empirical vs analytic", "s", "covariance", false, false, {}};
    PlotSeries emp{"empirical", {}, {}, true}, exact{"analytic", {}, {}, false};
    for (const auto& e : cov.entries) {
        if (e.mode != 0 || e.node_a != nodes.back()) continue;
        slice.rows.push_back({std::to_string(e.node_b), csv_number(grid.node(e.node_b)), csv_number(e.sample),
                              csv_number(e.exact), csv_number(e.std_error)});
        emp.x.push_back(grid.node(e.node_b));
        emp.y.push_back(e.sample);
    }
    for (std::size_t k = 0; k <= 64; ++k) {
        const double s = grid.horizon() * static_cast<double>(k) / 64.0;
        exact.x.push_back(s);
        exact.y.push_back(kernel.mode(0, grid.horizon(), s));
    }
    plot.series = {exact, emp};
    report.tables.push_back(slice);
    report.plots.push_back(plot);

    if (c.epsilon != 0.0) return;

    Table halving{"precision_residual", {"N", "dt", "relative_residual", "initial_defect", "terminal_defect"}, {}};
    std::vector<PrecisionResidual> res;
    for (std::size_t factor : {1u, 2u, 4u}) {
        const TimeGrid g(c.horizon, c.steps * factor);
        res.push_back(precision_residual(spec, g, trig_test_path(spec, g)));
        halving.rows.push_back(row({static_cast<double>(g.steps()), g.dt(), res.back().relative_residual,
                                    res.back().initial_defect, res.back().terminal_defect}));
    }
    report.tables.push_back(halving);
    report.checks.push_back(bound_check("precision_residual", res[0].relative_residual, 1e-2));
    report.checks.push_back(
        bound_check("precision_residual_ratio", -res[0].relative_residual / res[1].relative_residual, -3.5));
    report.checks.push_back(closeness_check("precision_initial_defect", res[0].initial_defect, 0.0, 0.0));
    const double ratio = res[0].terminal_defect / res[1].terminal_defect;
    report.checks.push_back(closeness_check("precision_terminal_defect_ratio", ratio, 2.25, 0.75));

    const SobolevBound sob = sobolev_moment_bound(spec, grid, mc);
    // Trapezoid of the exact marginal variance: the quantity the sampler estimates without bias.
    double discrete = 0.0;
    for (std::size_t j = 0; j < spec.modes(); ++j) {
        const double wj = std::pow(spec.eigenvalue(j), spec.beta());
        for (std::size_t k = 0; k <= grid.steps(); ++k) {
            const double w = (k == 0 || k == grid.steps()) ? 0.5 : 1.0;
            discrete += w * wj * convolution_variance(spec, j, grid.node(k)) * grid.dt();
        }
    }
    CheckRecord bound = bound_check("sobolev_bound", sob.lhs.value, sob.rhs + 3.0 * sob.lhs.std_error,
                                    sob.lhs.std_error);
    bound.estimate = sob.lhs;
    report.checks.push_back(bound);
    report.checks.push_back(closeness_check("sobolev_exact", sob.lhs, discrete, 3.0 * sob.lhs.std_error));
    report.checks.push_back(recorded("sobolev_exact_continuum", sob.exact));
}

// ----------------------------------------------------------------- moments

void moment_checks(const ExperimentConfig& c, RunReport& report) {
    const OperatorSpec spec = c.operator_spec();
    const DriftSpec drift = c.drift_spec();
    require_bound(drift, c.experiment);
    const TimeGrid grid(c.horizon, c.steps);
    const MomentBoundTable t = moment_bound_suite(spec, drift, c.state(), grid, c.moment_orders, mc_options(c));

    Table table{"moment_bounds", {"order", "moment", "std_error", "bound"}, {}};
    for (const auto& r : t.rows) {
        const double rel = r.moment.value > 0.0 ? r.moment.std_error / r.moment.value : 0.0;
        CheckRecord check = bound_check("moment_rho_n" + std::to_string(r.order), r.moment.value,
                                        r.bound * (1.0 + 3.0 * rel), r.moment.std_error);
        check.estimate = r.moment;
        report.checks.push_back(check);
        table.rows.push_back(row({static_cast<double>(r.order), r.moment.value, r.moment.std_error, r.bound}));
    }
    report.tables.push_back(table);
    const double rel = t.ito_gamma_sq.value > 0.0 ? t.ito_gamma_sq.std_error / t.ito_gamma_sq.value : 0.0;
    CheckRecord ito = bound_check("ito_gamma_second_moment", t.ito_gamma_sq.value, t.ito_bound * (1.0 + 3.0 * rel),
                                  t.ito_gamma_sq.std_error);
    ito.estimate = t.ito_gamma_sq;
    report.checks.push_back(ito);

    // Isometry: Var(I(gamma)) against E int |gamma|^2.
    const SampleTable s = weighted_table(spec, drift, c.state(), grid, {}, mc_options(c));
    const Estimate var = variance_estimate(s.ito_gamma, {});
    const Estimate l2 = mean_estimate(s.gamma_l2_sq);
    report.checks.push_back(closeness_check("ito_isometry", var, l2.value, 4.0 * combined(var, l2)));
    report.checks.push_back(
        recorded("cm_norm_max_over_stated_bound", t.cm_stated_bound > 0.0 ? t.cm_max / t.cm_stated_bound : 0.0));
}

// --------------------------------------------------------------- invariant

WindowGrid window_for(const ExperimentConfig& c, const OperatorSpec& spec, const DriftSpec& drift) {
    return make_window(spec, drift, c.resolved_window_length(), c.window_steps);
}

void invariant_checks(const ExperimentConfig& c, RunReport& report) {
    require_white(c);
    require_window_drift(c);
    const OperatorSpec spec = c.operator_spec();
    const DriftSpec drift = c.drift_spec();
    const WindowGrid window = window_for(c, spec, drift);
    const McOptions mc = mc_options(c);
    const std::size_t d = spec.modes();

    std::vector<StateFunction> phis;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) {
        phis.push_back([j](std::span<const double> z) { return z[j] * z[j]; });
        names.push_back("z" + std::to_string(j + 1) + "_sq");
    }
    phis.push_back([](std::span<const double> z) { return z[0]; });
    names.push_back("z1");
    std::vector<PathFunctional> fns;
    for (const auto& p : phis) fns.push_back(at_origin(p));

    const SampleTable table = stationary_table(spec, drift, window, fns, mc);
    const std::vector<double> rho = table.weights();
    Estimate norm = mean_estimate(rho);
    norm.ess = effective_sample_size(rho);
    report.checks.push_back(closeness_check("invariant_normalization", norm, 1.0, 3.0 * norm.std_error));

    LongRunOptions lr;
    lr.burn_in = c.long_run_burn_in;
    lr.averaging = c.long_run_averaging;
    lr.dt = window.grid.dt();
    lr.chains = c.long_run_chains;
    lr.seed = c.seed;
    lr.workers = c.workers;
    const std::vector<Estimate> long_run = long_run_oracle(spec, drift, phis, lr);

    const bool analytic = drift.kind != DriftKind::bounded_tanh;
    const double c_shift = drift.kind == DriftKind::linear ? drift.coefficient : 0.0;
    Table out{"invariant_estimates",
              {"functional", "analytic", "discrete", "weighted", "weighted_se", "long_run", "long_run_se"}, {}};
    for (std::size_t p = 0; p < phis.size(); ++p) {
        const Estimate w = table_mean(table, p, true);
        double exact = std::nan(""), disc = std::nan("");
        if (analytic && p < d) {
            const LinearInvariantOracle o = linear_invariant_variance(spec, c_shift, p, window.grid.dt());
            exact = o.variance;
            disc = o.discrete_variance;
            const double bias = std::abs(disc - exact);
            report.checks.push_back(closeness_check("invariant_variance/" + mode_name(p), w, exact,
                                                    3.0 * w.std_error + bias));
            report.checks.push_back(closeness_check("long_run_variance/" + mode_name(p), long_run[p], exact,
                                                    3.0 * long_run[p].std_error + bias));
        } else if (analytic) {
            exact = 0.0;
            disc = 0.0;
            report.checks.push_back(closeness_check("invariant_mean/z1", w, 0.0, 3.0 * w.std_error));
        }
        if (p == 0 || p == d) {
            report.checks.push_back(closeness_check("invariant_vs_long_run/" + names[p], w, long_run[p].value,
                                                    3.0 * combined(w, long_run[p])));
        }
        out.rows.push_back({names[p], csv_number(exact), csv_number(disc), csv_number(w.value),
                            csv_number(w.std_error), csv_number(long_run[p].value),
                            csv_number(long_run[p].std_error)});
    }
    report.tables.push_back(out);

    // Halve the window with the same streams (increments near t = 0 are shared).
    if (c.window_steps % 2 == 0) {
        const WindowGrid half = make_window(spec, drift, window.length() / 2.0, c.window_steps / 2);
        const PathFunctional f0[] = {fns[0]};
        const SampleTable short_table = stationary_table(spec, drift, half, f0, mc);
        const Estimate full = table_mean(table, 0, true);
        const Estimate shorter = table_mean(short_table, 0, true);
        report.checks.push_back(closeness_check("window_doubling/z1_sq", full, shorter.value, full.std_error));
    }
    report.checks.push_back(recorded("window_truncation_bound", window.truncation_bound));
    report.checks.push_back(recorded("ess_fraction", norm.ess / static_cast<double>(c.samples)));
}

// ----------------------------------------------------------- density ratio

void density_checks(const ExperimentConfig& c, RunReport& report) {
    require_white(c);
    require_window_drift(c);
    const OperatorSpec spec = c.operator_spec();
    const DriftSpec drift = c.drift_spec();
    const WindowGrid window = window_for(c, spec, drift);
    const double sd = std::sqrt(1.0 / (2.0 * spec.eigenvalue(0)));
    std::vector<double> points(c.density_points);
    for (std::size_t i = 0; i < points.size(); ++i) {
        points[i] = points.size() == 1
                        ? 0.0
                        : -2.0 * sd + 4.0 * sd * static_cast<double>(i) / static_cast<double>(points.size() - 1);
    }
    const std::optional<double> bw = c.bandwidth > 0.0 ? std::optional<double>(c.bandwidth) : std::nullopt;
    const DensityRatioProfile profile = density_ratio_estimate(spec, drift, window, points, bw, mc_options(c));

    double min_psi = std::numeric_limits<double>::infinity();
    for (const auto& p : profile.points) min_psi = std::min(min_psi, p.psi);
    report.checks.push_back(bound_check("psi_nonnegative", -min_psi, 0.0));

    const bool analytic = drift.kind != DriftKind::bounded_tanh;
    const double c_shift = drift.kind == DriftKind::linear ? drift.coefficient : 0.0;
    Table table{"psi_profile", {"x", "psi_hat", "local_count", "closed_form"}, {}};
    LinePlot plot{"psi_profile", "density ratio along the first coordinate", "x", "psi", false, false, {}};
    PlotSeries est{"psi_hat", {}, {}, true}, exact{"closed form", {}, {}, false};
    for (std::size_t i = 0; i < profile.points.size(); ++i) {
        const auto& p = profile.points[i];
        const double ref = analytic ? linear_density_ratio(spec, c_shift, p.x) : std::nan("");
        if (analytic) {
            report.checks.push_back(
                closeness_check("psi_closed_form/point_" + std::to_string(i + 1), p.psi, ref, 0.1 * ref));
            exact.x.push_back(p.x);
            exact.y.push_back(ref);
        }
        est.x.push_back(p.x);
        est.y.push_back(p.psi);
        table.rows.push_back(row({p.x, p.psi, p.local_count, ref}));
    }
    plot.series = analytic ? std::vector<PlotSeries>{exact, est} : std::vector<PlotSeries>{est};
    report.tables.push_back(table);
    report.plots.push_back(plot);
    report.checks.push_back(closeness_check("psi_normalization", profile.normalization, 1.0, 0.05));
    report.checks.push_back(recorded("bandwidth", profile.bandwidth));
}

// -------------------------------------------------------------- regularity

void regularity_checks(const ExperimentConfig& c, RunReport& report) {
    const OperatorSpec spec = c.operator_spec();
    const DriftSpec drift = c.drift_spec();
    const TimeGrid grid(c.horizon, c.steps);
    const std::size_t d = spec.modes();

    std::vector<double> deriv(c.regularity_draws), oper(c.regularity_draws), term(c.regularity_draws);
    parallel_for(c.regularity_draws, c.workers, [&](std::size_t i) {
        NormalStream s(c.seed, StreamTag::auxiliary, 2000000 + i);
        std::vector<double> coef(4 * d);
        for (auto& v : coef) v = s.normal();
        ModeArray f(d, grid.nodes());
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < grid.nodes(); ++k) {
                const double t = grid.node(k) / grid.horizon();
                double v = coef[4 * j + 3];
                for (std::size_t q = 0; q < 3; ++q) {
                    v += coef[4 * j + q] * std::sin(static_cast<double>(q + 1) * std::numbers::pi * t);
                }
                f(j, k) = v;
            }
        }
        const RegularityReport r = regularity_check(spec, grid, f);
        deriv[i] = r.u_prime_l2 / (2.0 * r.f_l2 * r.slack);
        oper[i] = r.au_l2 / (r.f_l2 * r.slack);
        term[i] = r.terminal_ratio;
    });
    auto max_of = [](const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); };
    report.checks.push_back(bound_check("regularity_derivative_bound", max_of(deriv), 1.0));
    report.checks.push_back(bound_check("regularity_operator_bound", max_of(oper), 1.0));
    report.checks.push_back(recorded("regularity_terminal_ratio_max", max_of(term)));

    // Constant forcing on the first mode: |Au|^2 = int_0^T (1 - e^{-lambda t})^2 dt.
    ModeArray ones(d, grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k) ones(0, k) = 1.0;
    const RegularityReport constant = regularity_check(spec, grid, ones);
    const double lambda = spec.eigenvalue(0);
    const double T = c.horizon;
    const double closed = T + 2.0 * std::expm1(-lambda * T) / lambda - std::expm1(-2.0 * lambda * T) / (2.0 * lambda);
    report.checks.push_back(
        closeness_check("regularity_constant_forcing", constant.au_l2 * constant.au_l2, closed, 5e-4));

    // Nilpotency of the discrete Jacobian on a coarse probe.
    std::vector<double> coarse_lambda(spec.eigenvalues().begin(),
                                      spec.eigenvalues().begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(d, 4)));
    const OperatorSpec coarse(coarse_lambda, spec.beta(), spec.epsilon());
    DriftSpec coarse_drift = drift;
    if (drift.kind == DriftKind::bounded_tanh) {
        coarse_drift = DriftSpec::bounded_tanh(drift.amplitude, drift.scale, coarse.modes());
    }
    ModeVector coarse_x(coarse.modes(), 0.0);
    const ModeVector x = c.state();
    for (std::size_t j = 0; j < coarse.modes(); ++j) coarse_x[j] = x[j];
    const NilpotencyReport nil = nilpotency_check(coarse, coarse_drift, coarse_x, TimeGrid(c.horizon, 16), 3, c.seed);
    report.checks.push_back(bound_check("nilpotency_upper_fd", nil.max_upper_fd, 1e-6));
    report.checks.push_back(closeness_check("nilpotency_upper_analytic", nil.max_upper_analytic, 0.0, 0.0));
    report.checks.push_back(bound_check("nilpotency_power", nil.max_power_entry, 1e-12));
    report.checks.push_back(closeness_check("nilpotency_det2", nil.det2, 1.0, 1e-10));
    report.checks.push_back(bound_check("nilpotency_fd_vs_analytic", nil.max_fd_analytic_gap, 1e-5));

    // Cameron-Martin identity for b = 1: gap is O(dt) and halves with dt.
    const DriftSpec unit = DriftSpec::custom([](double) { return 1.0; }, 0.0, std::sqrt(static_cast<double>(d)),
                                             false, [](double) { return 0.0; });
    const ModeVector origin(d, 0.0);
    Table cm{"cm_identity", {"N", "dt", "direct_sq", "drift_l2_sq", "rel_gap"}, {}};
    std::vector<double> gaps;
    for (std::size_t factor : {1u, 2u, 4u}) {
        const TimeGrid g(c.horizon, c.steps * factor);
        const ModeArray zero(d, g.nodes());
        const GammaPath gp = gamma(spec, unit, origin, zero, g);
        const CMNormReport r = cm_norm_sq(spec, g, gp.gamma.values, gp.drift.values);
        gaps.push_back(r.rel_gap);
        cm.rows.push_back(row({static_cast<double>(g.steps()), g.dt(), r.direct_sq, r.drift_l2_sq, r.rel_gap}));
    }
    report.tables.push_back(cm);
    report.checks.push_back(closeness_check("cm_identity_halving_1", gaps[0] / gaps[1], 2.25, 0.75));
    report.checks.push_back(closeness_check("cm_identity_halving_2", gaps[1] / gaps[2], 2.25, 0.75));
    report.checks.push_back(recorded("cm_identity_constant", gaps[0] / grid.dt()));

    // Inverse pairing of G and F on a random path.
    NormalStream s(c.seed, StreamTag::auxiliary, 3000000);
    ModeArray h(d, grid.nodes());
    double scale = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = 1; k < grid.nodes(); ++k) {
            h(j, k) = s.normal();
            scale = std::max(scale, std::abs(h(j, k)));
        }
    }
    const DeterministicPath fh = solve_F(spec, drift, x, h, grid);
    const DeterministicPath gfh = apply_G(spec, drift, x, fh.values, grid);
    const DeterministicPath gh = apply_G(spec, drift, x, h, grid);
    const DeterministicPath fgh = solve_F(spec, drift, x, gh.values, grid);
    double e1 = 0.0, e2 = 0.0;
    for (std::size_t q = 0; q < h.flat().size(); ++q) {
        e1 = std::max(e1, std::abs(gfh.values.flat()[q] - h.flat()[q]));
        e2 = std::max(e2, std::abs(fgh.values.flat()[q] - h.flat()[q]));
    }
    const double tol = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + scale);
    report.checks.push_back(bound_check("inverse_pairing_G_of_F", e1, tol));
    report.checks.push_back(bound_check("inverse_pairing_F_of_G", e2, tol));
}

// ------------------------------------------------------------------- sweep

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) return std::nan("");
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

RunReport convergence_sweep(const ExperimentConfig& config, std::span<const std::size_t> steps) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = config;
    report.config.sweep_steps.assign(steps.begin(), steps.end());
    const OperatorSpec spec = config.operator_spec();
    const DriftSpec drift = config.drift_spec();
    const ModeVector x = config.state();
    const McOptions mc = mc_options(config);
    const bool linear = drift.kind == DriftKind::linear;

    Table table{"convergence_sweep",
                {"N", "dt", "weighted", "weighted_se", "direct", "direct_se", "gap", "combined_se", "closed_form",
                 "discrete_law"},
                {}};
    std::vector<double> dts, gaps, ses, biases, errors, error_ses, estimates;
    const NamedFunctional second = terminal_square(0);
    const PathFunctional fns[] = {second.fn};
    for (std::size_t n : steps) {
        const TimeGrid grid(config.horizon, n);
        const SampleTable w = weighted_table(spec, drift, x, grid, fns, mc);
        const SampleTable dtab = direct_table(spec, drift, x, grid, fns, mc);
        const Estimate we = table_mean(w, 0, true, config.self_normalized);
        const Estimate de = table_mean(dtab, 0, false);
        double closed = std::nan(""), discrete = std::nan("");
        if (linear || drift.kind == DriftKind::zero) {
            const LinearOuOracle o = linear_ou_terminal(spec, linear ? drift.coefficient : 0.0, x, grid, 0);
            closed = o.variance + o.mean * o.mean;
            discrete = o.discrete_variance + o.discrete_mean * o.discrete_mean;
        }
        report.checks.push_back(
            closeness_check("sweep_gap/N=" + std::to_string(n), we, de.value, 3.0 * combined(we, de)));
        dts.push_back(grid.dt());
        gaps.push_back(std::abs(we.value - de.value));
        ses.push_back(combined(we, de));
        biases.push_back(std::abs(discrete - closed));
        errors.push_back(std::abs(de.value - closed));
        error_ses.push_back(de.std_error);
        estimates.push_back(de.value);
        table.rows.push_back(row({static_cast<double>(n), grid.dt(), we.value, we.std_error, de.value, de.std_error,
                                  we.value - de.value, combined(we, de), closed, discrete}));
    }
    report.tables.push_back(table);

    if (linear) {
        // Errors against the closed form shrink with dt up to Monte Carlo noise.
        for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
            const double noise = 3.0 * std::hypot(error_ses[i], error_ses[i + 1]);
            report.checks.push_back(bound_check("sweep_error_monotone/N=" + std::to_string(steps[i + 1]),
                                                errors[i + 1], errors[i] + noise, error_ses[i + 1]));
        }
        bool decreasing = true;
        for (std::size_t i = 0; i + 1 < biases.size(); ++i) decreasing = decreasing && biases[i + 1] < biases[i];
        report.checks.push_back(closeness_check("sweep_bias_monotone", decreasing ? 1.0 : 0.0, 1.0, 0.0));
        const double slope = fit_slope(dts, biases);
        report.checks.push_back(closeness_check("sweep_bias_slope", slope, 1.0, 0.3));
    } else if (drift.kind == DriftKind::bounded_tanh && estimates.size() >= 3) {
        std::vector<double> diffs, mid;
        for (std::size_t i = 0; i + 1 < estimates.size(); ++i) {
            diffs.push_back(std::abs(estimates[i] - estimates[i + 1]));
            mid.push_back(dts[i]);
        }
        report.checks.push_back(recorded("sweep_successive_difference_slope", fit_slope(mid, diffs)));
    }

    LinePlot plot{"convergence_sweep", "estimator gap vs dt", "dt", "absolute value", true, true, {}};
    plot.series.push_back({"|weighted - direct|", dts, gaps, true});
    plot.series.push_back({"combined SE", dts, ses, false});
    if (linear) plot.series.push_back({"discrete bias (exact)", dts, biases, false});
    report.plots.push_back(plot);

    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

RunReport run(const ExperimentConfig& config) {
    validate_config(config);
    if (config.experiment == "convergence-sweep") return convergence_sweep(config, config.sweep_steps);
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.config = config;
    const std::string& e = config.experiment;
    if (e == "verify-girsanov") {
        girsanov_checks(config, report);
    } else if (e == "colored") {
        if (!(config.epsilon > 0.0)) {
            throw ConfigError(0, "operator.epsilon", "the colored experiment needs epsilon > 0");
        }
        girsanov_checks(config, report);
    } else if (e == "verify-kernel") {
        kernel_checks(config, report);
    } else if (e == "moment-bounds") {
        moment_checks(config, report);
    } else if (e == "invariant") {
        invariant_checks(config, report);
    } else if (e == "density-ratio") {
        density_checks(config, report);
    } else if (e == "regularity") {
        regularity_checks(config, report);
    } else {
        throw ConfigError(0, "experiment", "unknown experiment '" + e + "'");
    }
    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<std::string> experiment_manifest(const ExperimentConfig& c) {
    const std::size_t d = c.operator_spec().modes();
    std::vector<std::string> names;
    const std::string& e = c.experiment;
    if (e == "verify-girsanov" || e == "colored") {
        names.push_back("weight_normalization");
        if (c.drift_kind == DriftKind::zero) {
            names.push_back("zero_drift_unit_weights");
            names.push_back("zero_drift_exact_agreement");
        }
        for (const auto& f : builtin_functionals()) names.push_back("agreement/" + f.name);
        if (c.drift_kind == DriftKind::linear) {
            for (std::size_t j = 0; j < d; ++j) {
                for (const char* stem : {"ou_mean_weighted/", "ou_mean_direct/", "ou_variance_weighted/",
                                         "ou_variance_direct/"}) {
                    names.push_back(stem + mode_name(j));
                }
            }
        }
        names.push_back("ess_fraction");
        names.push_back("drift_lipschitz_certificate");
        if (c.epsilon > 0.0) names.push_back("colored_lipschitz_certificate");
    } else if (e == "verify-kernel") {
        names.push_back("kernel_covariance_max_z");
        if (d > 1) names.push_back("kernel_cross_mode_max_z");
        names.push_back("kernel_covariance_max_deviation");
        names.push_back("kernel_gram_psd");
        if (c.epsilon == 0.0) {
            for (const char* n : {"precision_residual", "precision_residual_ratio", "precision_initial_defect",
                                  "precision_terminal_defect_ratio", "sobolev_bound", "sobolev_exact",
                                  "sobolev_exact_continuum"}) {
                names.push_back(n);
            }
        }
    } else if (e == "moment-bounds") {
        for (int n : c.moment_orders) names.push_back("moment_rho_n" + std::to_string(n));
        names.push_back("ito_gamma_second_moment");
        names.push_back("ito_isometry");
        names.push_back("cm_norm_max_over_stated_bound");
    } else if (e == "invariant") {
        names.push_back("invariant_normalization");
        const bool analytic = c.drift_kind != DriftKind::bounded_tanh;
        for (std::size_t p = 0; p <= d; ++p) {
            if (analytic && p < d) {
                names.push_back("invariant_variance/" + mode_name(p));
                names.push_back("long_run_variance/" + mode_name(p));
            } else if (analytic) {
                names.push_back("invariant_mean/z1");
            }
            if (p == 0) names.push_back("invariant_vs_long_run/z1_sq");
            if (p == d) names.push_back("invariant_vs_long_run/z1");
        }
        if (c.window_steps % 2 == 0) names.push_back("window_doubling/z1_sq");
        names.push_back("window_truncation_bound");
        names.push_back("ess_fraction");
    } else if (e == "density-ratio") {
        names.push_back("psi_nonnegative");
        if (c.drift_kind != DriftKind::bounded_tanh) {
            for (std::size_t i = 0; i < c.density_points; ++i) {
                names.push_back("psi_closed_form/point_" + std::to_string(i + 1));
            }
        }
        names.push_back("psi_normalization");
        names.push_back("bandwidth");
    } else if (e == "regularity") {
        for (const char* n :
             {"regularity_derivative_bound", "regularity_operator_bound", "regularity_terminal_ratio_max",
              "regularity_constant_forcing", "nilpotency_upper_fd", "nilpotency_upper_analytic", "nilpotency_power",
              "nilpotency_det2", "nilpotency_fd_vs_analytic", "cm_identity_halving_1", "cm_identity_halving_2",
              "cm_identity_constant", "inverse_pairing_G_of_F", "inverse_pairing_F_of_G"}) {
            names.push_back(n);
        }
    } else if (e == "convergence-sweep") {
        for (std::size_t n : c.sweep_steps) names.push_back("sweep_gap/N=" + std::to_string(n));
        if (c.drift_kind == DriftKind::linear) {
            for (std::size_t i = 1; i < c.sweep_steps.size(); ++i) {
                names.push_back("sweep_error_monotone/N=" + std::to_string(c.sweep_steps[i]));
            }
            names.push_back("sweep_bias_monotone");
            names.push_back("sweep_bias_slope");
        } else if (c.drift_kind == DriftKind::bounded_tanh && c.sweep_steps.size() >= 3) {
            names.push_back("sweep_successive_difference_slope");
        }
    }
    return names;
}

int exit_status(const RunReport& report) noexcept { return report.passed() ? 0 : 1; }

}  // namespace mg
