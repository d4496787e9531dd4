// Acceptance suite: runs the experiments at their default desk-scale sizes with the
// pre-registered seed and prints one PASS/FAIL line per criterion.
//
//   acceptance [--out DIR] [--seed U64] [--workers K]

#include <CLI11.hpp>

#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mildgirsanov/config.hpp"
#include "mildgirsanov/experiments.hpp"
#include "mildgirsanov/log.hpp"
#include "mildgirsanov/report.hpp"

using namespace mg;

namespace {

struct Harness {
    std::string out_dir;
    std::uint64_t seed = 20261018;
    unsigned workers = 1;

    ExperimentConfig base(const std::string& experiment) const {
        ExperimentConfig c;
        c.experiment = experiment;
        c.seed = seed;
        c.workers = workers;
        c.output_formats = {"csv", "json", "svg"};
        return c;
    }

    RunReport execute(const std::string& label, ExperimentConfig c) const {
        c.output_directory = out_dir + "/" + label;
        RunReport r = run(c);
        write_outputs(r);
        std::cerr << "  ran " << label << " (" << static_cast<long>(r.wall_time_ms) << " ms)\n";
        return r;
    }
};

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Every check whose name starts with one of the prefixes must pass; at least one must exist.
bool prefixes_pass(const RunReport& r, std::initializer_list<std::string> prefixes, std::ostream& why) {
    bool ok = true, any = false;
    for (const auto& c : r.checks) {
        for (const auto& p : prefixes) {
            if (!starts_with(c.name, p)) continue;
            any = true;
            if (c.status == CheckStatus::fail) {
                ok = false;
                why << ' ' << r.config.experiment << ':' << c.name << "=" << c.value << " (ref " << c.reference
                    << ")";
            }
        }
    }
    if (!any) why << " no checks matching the requested names";
    return ok && any;
}

double value_of(const RunReport& r, const std::string& name) {
    const CheckRecord* c = r.find(name);
    return c ? c->value : std::nan("");
}

struct Outcome {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

// Bitwise comparison of everything a run reports.
bool identical(const RunReport& a, const RunReport& b) {
    if (a.checks.size() != b.checks.size() || a.tables.size() != b.tables.size()) return false;
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        const auto& x = a.checks[i];
        const auto& y = b.checks[i];
        if (x.name != y.name || csv_number(x.value) != csv_number(y.value) ||
            csv_number(x.std_error) != csv_number(y.std_error) ||
            csv_number(x.reference) != csv_number(y.reference) || x.status != y.status) {
            return false;
        }
    }
    for (std::size_t t = 0; t < a.tables.size(); ++t) {
        if (a.tables[t].rows != b.tables[t].rows) return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    Harness h;
    h.out_dir = "acceptance-out";
    CLI::App app{"acceptance criteria for the mild Girsanov verification suite"};
    app.add_option("--out", h.out_dir, "directory for per-run reports");
    app.add_option("--seed", h.seed, "master seed");
    app.add_option("--workers", h.workers, "worker threads")->check(CLI::Range(1u, 1024u));
    CLI11_PARSE(app, argc, argv);
    set_warnings_enabled(false);

    std::vector<Outcome> outcomes;
    auto record = [&](int id, std::string title, bool pass, const std::ostringstream& why) {
        outcomes.push_back({id, std::move(title), pass, why.str()});
    };

    // 1-3: the identity matrix {zero, linear, tanh} x {x = 0, e_1} x {eps = 0, 0.5}.
    std::vector<RunReport> matrix;
    for (DriftKind kind : {DriftKind::zero, DriftKind::linear, DriftKind::bounded_tanh}) {
        for (double x1 : {0.0, 1.0}) {
            for (double eps : {0.0, 0.5}) {
                ExperimentConfig c = h.base(eps > 0.0 ? "colored" : "verify-girsanov");
                c.drift_kind = kind;
                c.drift_c = -0.5;
                c.drift_amplitude = 0.5;
                c.drift_scale = 1.0;
                c.epsilon = eps;
                c.initial_state = {x1};
                std::ostringstream label;
                label << "girsanov-" << to_string(kind) << "-x" << x1 << "-eps" << eps;
                matrix.push_back(h.execute(label.str(), c));
            }
        }
    }
    {
        std::ostringstream why;
        bool ok = true;
        for (const auto& r : matrix) {
            ok &= prefixes_pass(r, {"agreement/"}, why);
            if (r.config.drift_kind == DriftKind::zero) {
                ok &= prefixes_pass(r, {"zero_drift_unit_weights", "zero_drift_exact_agreement"}, why);
            }
        }
        record(1, "Girsanov identity: weighted vs direct within 3 SE (12 configurations x 4 functionals)", ok, why);
    }
    {
        std::ostringstream why;
        bool ok = true;
        for (const auto& r : matrix) ok &= prefixes_pass(r, {"weight_normalization"}, why);
        record(2, "weight normalization |E[rho] - 1| <= 3 SE across the matrix", ok, why);
    }
    {
        std::ostringstream why;
        bool ok = true;
        for (const auto& r : matrix) {
            if (r.config.drift_kind != DriftKind::linear) continue;
            ok &= prefixes_pass(r, {"ou_mean_weighted/", "ou_mean_direct/", "ou_variance_weighted/",
                                    "ou_variance_direct/"},
                                why);
        }
        record(3, "linear drift OU oracle: terminal mean and variance per mode", ok, why);
    }

    // 4: moment bounds with |b|_inf = 0.5, once with d = 1 and once with d = 8.
    {
        std::ostringstream why;
        bool ok = true;
        for (std::size_t d : {1u, 8u}) {
            ExperimentConfig c = h.base("moment-bounds");
            c.modes = d;
            c.drift_kind = DriftKind::bounded_tanh;
            c.drift_amplitude = 0.5 / std::sqrt(static_cast<double>(d));
            const RunReport r = h.execute("moment-bounds-d" + std::to_string(d), c);
            ok &= prefixes_pass(r, {"moment_rho_n2", "moment_rho_n3", "ito_gamma_second_moment"}, why);
            const CheckRecord* n2 = r.find("moment_rho_n2");
            const double bound = n2->reference / (1.0 + 3.0 * n2->std_error / n2->value);
            if (std::abs(bound - 1.648721) > 1e-6) {
                ok = false;
                why << " n = 2 bound " << bound;
            }
            if (d == 1) {
                const CheckRecord* ito = r.find("ito_gamma_second_moment");
                const double ito_bound = ito->reference / (1.0 + 3.0 * ito->std_error / ito->value);
                if (std::abs(ito_bound - 0.125) > 1e-12) {
                    ok = false;
                    why << " Ito bound " << ito_bound;
                }
            }
        }
        record(4, "moment bounds E[rho^n] for n = 2, 3 and E[I^2] <= T |b|^2 / (2 omega)", ok, why);
    }

    // 5-6: kernel, precision operator, Sobolev bound.
    const RunReport kernel = h.execute("kernel-d8", h.base("verify-kernel"));
    {
        std::ostringstream why;
        const bool ok = prefixes_pass(kernel,
                                      {"kernel_covariance_max_z", "kernel_cross_mode_max_z", "kernel_gram_psd",
                                       "precision_residual", "precision_initial_defect",
                                       "precision_terminal_defect_ratio"},
                                      why);
        record(5, "kernel covariance within 4 SE on 6x6 nodes; precision residual <= 1e-2, ratio >= 3.5", ok, why);
    }
    {
        std::ostringstream why;
        bool ok = prefixes_pass(kernel, {"sobolev_bound"}, why);
        ExperimentConfig c = h.base("verify-kernel");
        c.modes = 1;
        const RunReport one = h.execute("kernel-d1", c);
        ok &= prefixes_pass(one, {"sobolev_bound", "sobolev_exact"}, why);
        const double exact = value_of(one, "sobolev_exact_continuum");
        if (std::abs(exact - 0.283834) > 1e-6) {
            ok = false;
            why << " one-mode exact value " << exact;
        }
        const CheckRecord* b = one.find("sobolev_bound");
        if (std::abs(b->reference - 3.0 * b->std_error - 0.5) > 1e-12) {
            ok = false;
            why << " one-mode bound " << b->reference - 3.0 * b->std_error;
        }
        record(6, "Sobolev bound (d = 8) and one-mode value 0.283834 against bound 0.5", ok, why);
    }

    // 7, 9, 10: regularity suite with a tanh drift (so the nilpotency probe is non-trivial).
    ExperimentConfig reg = h.base("regularity");
    reg.drift_kind = DriftKind::bounded_tanh;
    reg.initial_state = {1.0};
    const RunReport regularity = h.execute("regularity-N256", reg);
    {
        std::ostringstream why;
        const bool ok = prefixes_pass(regularity, {"cm_identity_halving_"}, why);
        record(7, "Cameron-Martin identity gap O(dt), halving ratios in [1.5, 3]", ok, why);
    }

    // 8: Ito isometry at M = 1e4.
    {
        ExperimentConfig c = h.base("moment-bounds");
        c.modes = 1;
        c.drift_kind = DriftKind::bounded_tanh;
        c.samples = 10000;
        std::ostringstream why;
        const bool ok = prefixes_pass(h.execute("ito-isometry", c), {"ito_isometry"}, why);
        record(8, "Ito isometry Var(I) vs E int |gamma|^2 within 4 SE at M = 1e4", ok, why);
    }

    {
        std::ostringstream why;
        const bool ok = prefixes_pass(regularity, {"nilpotency_"}, why) &&
                        regularity.find("nilpotency_upper_fd") != nullptr;
        record(9, "discrete Jacobian strictly lower triangular, J^N = 0, det2 = 1", ok, why);
    }

    {
        std::ostringstream why;
        bool ok = prefixes_pass(regularity, {"regularity_derivative_bound", "regularity_operator_bound"}, why);
        ExperimentConfig fine = reg;
        fine.steps = 1024;
        const RunReport r = h.execute("regularity-N1024", fine);
        ok &= prefixes_pass(r, {"regularity_derivative_bound", "regularity_operator_bound",
                                "regularity_constant_forcing"},
                            why);
        const double value = value_of(r, "regularity_constant_forcing");
        if (std::round(value * 1000.0) != 168.0) {
            ok = false;
            why << " constant forcing " << value;
        }
        record(10, "maximal regularity on 1e3 random f; constant f gives 0.168 at N = 1024", ok, why);
    }

    // 11: invariant measure for zero, linear and tanh drifts.
    {
        std::ostringstream why;
        bool ok = true;
        for (DriftKind kind : {DriftKind::zero, DriftKind::linear, DriftKind::bounded_tanh}) {
            ExperimentConfig c = h.base("invariant");
            c.drift_kind = kind;
            c.drift_c = -0.5;
            const RunReport r = h.execute("invariant-" + to_string(kind), c);
            if (kind == DriftKind::bounded_tanh) {
                ok &= prefixes_pass(r, {"invariant_vs_long_run/"}, why);
            } else {
                ok &= prefixes_pass(r, {"invariant_variance/"}, why);
            }
            ok &= prefixes_pass(r, {"window_doubling/"}, why);
        }
        record(11, "invariant measure: mu and shifted-OU moments, long-run agreement, window doubling < 1 SE", ok,
               why);
    }

    // 12: density ratio at M = 1e5.
    {
        ExperimentConfig c = h.base("density-ratio");
        c.drift_kind = DriftKind::linear;
        c.drift_c = -0.5;
        c.samples = 100000;
        std::ostringstream why;
        const bool ok = prefixes_pass(h.execute("density-ratio", c),
                                      {"psi_nonnegative", "psi_closed_form/", "psi_normalization"}, why);
        record(12, "density ratio within 10% of the closed form on |x| <= 2 sd; normalization within 5%", ok, why);
    }

    // 13: rerun with a different worker count and compare bit for bit.
    {
        std::ostringstream why;
        bool ok = true;
        const unsigned other = h.workers == 1 ? 4 : 1;
        auto rerun = [&](const std::string& label, ExperimentConfig c) {
            c.workers = h.workers;
            const RunReport a = h.execute(label + "-w" + std::to_string(c.workers), c);
            c.workers = other;
            const RunReport b = h.execute(label + "-w" + std::to_string(other), c);
            if (!identical(a, b)) {
                ok = false;
                why << ' ' << label;
            }
        };
        ExperimentConfig g = h.base("colored");
        g.drift_kind = DriftKind::bounded_tanh;
        g.epsilon = 0.5;
        g.initial_state = {1.0};
        rerun("determinism-girsanov", g);
        ExperimentConfig inv = h.base("invariant");
        inv.drift_kind = DriftKind::bounded_tanh;
        rerun("determinism-invariant", inv);
        ExperimentConfig dens = h.base("density-ratio");
        dens.drift_kind = DriftKind::linear;
        rerun("determinism-density", dens);
        record(13, "bit-identical results across worker counts (girsanov, invariant, density ratio)", ok, why);
    }

    int failures = 0;
    for (const auto& o : outcomes) {
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << o.id << ": " << o.title;
        if (!o.pass) std::cout << "  [" << o.detail << " ]";
        std::cout << '\n';
        failures += o.pass ? 0 : 1;
    }
    std::cout << (outcomes.size() - failures) << " of " << outcomes.size() << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}
