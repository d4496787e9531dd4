#include "mildgirsanov/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mg {

ConfigError::ConfigError(std::size_t line, std::string key, const std::string& message)
    : std::runtime_error([&] {
          std::ostringstream os;
          if (line > 0) os << "line " << line << ": ";
          if (!key.empty()) os << "key '" << key << "': ";
          os << message;
          return os.str();
      }()),
      line_(line),
      key_(std::move(key)) {}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"verify-girsanov", "verify-kernel", "moment-bounds",
                                                "invariant",       "density-ratio", "regularity",
                                                "colored",         "convergence-sweep"};
    return names;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& v, std::size_t line) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError(line, key, "expected a real number, got '" + v + "'");
    }
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v, std::size_t line) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(line, key, "expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(line, key, "expected true or false, got '" + v + "'");
}

template <class T, class Conv>
std::vector<T> to_list(const std::string& key, const std::string& v, std::size_t line, Conv conv) {
    std::vector<T> out;
    for (const auto& item : split_list(v)) out.push_back(static_cast<T>(conv(key, item, line)));
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += items[i];
    }
    return out;
}

template <class T, class Fmt>
std::string join_values(const std::vector<T>& items, Fmt fmt) {
    std::vector<std::string> parts;
    for (const auto& v : items) parts.push_back(fmt(v));
    return join(parts);
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value, std::size_t line) {
    const std::string& v = value;
    if (key == "experiment") {
        const auto& names = experiment_names();
        if (std::find(names.begin(), names.end(), v) == names.end()) {
            throw ConfigError(line, key, "unknown experiment '" + v + "'");
        }
        c.experiment = v;
    } else if (key == "operator.family") {
        if (v != "laplacian" && v != "explicit") {
            throw ConfigError(line, key, "family must be 'laplacian' or 'explicit'");
        }
        c.operator_family = v;
    } else if (key == "operator.d") {
        c.modes = to_u64(key, v, line);
    } else if (key == "operator.eigenvalues") {
        c.eigenvalues = to_list<double>(key, v, line, to_double);
    } else if (key == "operator.beta") {
        c.beta = to_double(key, v, line);
    } else if (key == "operator.epsilon") {
        c.epsilon = to_double(key, v, line);
    } else if (key == "drift.kind") {
        if (v == "zero") c.drift_kind = DriftKind::zero;
        else if (v == "linear") c.drift_kind = DriftKind::linear;
        else if (v == "tanh") c.drift_kind = DriftKind::bounded_tanh;
        else throw ConfigError(line, key, "drift kind must be zero, linear or tanh");
    } else if (key == "drift.c") {
        c.drift_c = to_double(key, v, line);
    } else if (key == "drift.amplitude") {
        c.drift_amplitude = to_double(key, v, line);
    } else if (key == "drift.scale") {
        c.drift_scale = to_double(key, v, line);
    } else if (key == "state.x") {
        c.initial_state = to_list<double>(key, v, line, to_double);
    } else if (key == "grid.T") {
        c.horizon = to_double(key, v, line);
    } else if (key == "grid.N") {
        c.steps = to_u64(key, v, line);
    } else if (key == "window.S") {
        c.window_length = to_double(key, v, line);
    } else if (key == "window.N") {
        c.window_steps = to_u64(key, v, line);
    } else if (key == "mc.samples") {
        c.samples = to_u64(key, v, line);
    } else if (key == "mc.seed") {
        c.seed = to_u64(key, v, line);
    } else if (key == "mc.workers") {
        c.workers = static_cast<unsigned>(to_u64(key, v, line));
    } else if (key == "mc.self_normalized") {
        c.self_normalized = to_bool(key, v, line);
    } else if (key == "sweep.N") {
        c.sweep_steps = to_list<std::size_t>(key, v, line, to_u64);
    } else if (key == "moments.orders") {
        c.moment_orders = to_list<int>(key, v, line, to_u64);
    } else if (key == "density.bandwidth") {
        c.bandwidth = to_double(key, v, line);
    } else if (key == "density.points") {
        c.density_points = to_u64(key, v, line);
    } else if (key == "long_run.chains") {
        c.long_run_chains = to_u64(key, v, line);
    } else if (key == "long_run.burn_in") {
        c.long_run_burn_in = to_double(key, v, line);
    } else if (key == "long_run.averaging") {
        c.long_run_averaging = to_double(key, v, line);
    } else if (key == "regularity.draws") {
        c.regularity_draws = to_u64(key, v, line);
    } else if (key == "output.directory") {
        if (v.empty()) throw ConfigError(line, key, "output directory must not be empty");
        c.output_directory = v;
    } else if (key == "output.formats") {
        auto formats = split_list(v);
        for (const auto& f : formats) {
            if (f != "csv" && f != "json" && f != "svg") {
                throw ConfigError(line, key, "unknown output format '" + f + "'");
            }
        }
        c.output_formats = std::move(formats);
    } else if (key == "output.dump_paths") {
        c.dump_paths = to_bool(key, v, line);
    } else {
        throw ConfigError(line, key, "unknown key");
    }
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    std::vector<std::string> seen;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
        const std::string key = trim(content.substr(0, eq));
        const std::string value = trim(content.substr(eq + 1));
        if (key.empty()) throw ConfigError(line, "", "missing key before '='");
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
            throw ConfigError(line, key, "key given twice");
        }
        seen.push_back(key);
        set_config_value(c, key, value, line);
    }
    validate_config(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

OperatorSpec ExperimentConfig::operator_spec() const {
    if (operator_family == "explicit") return {eigenvalues, beta, epsilon};
    return OperatorSpec::laplacian(modes, beta, epsilon);
}

DriftSpec ExperimentConfig::drift_spec() const {
    switch (drift_kind) {
        case DriftKind::zero: return DriftSpec::zero();
        case DriftKind::linear: return DriftSpec::linear(drift_c);
        case DriftKind::bounded_tanh:
            return DriftSpec::bounded_tanh(drift_amplitude, drift_scale, operator_spec().modes());
        case DriftKind::componentwise_custom: break;
    }
    throw ConfigError(0, "drift.kind", "custom drifts cannot be configured from a file");
}

ModeVector ExperimentConfig::state() const {
    const std::size_t d = operator_spec().modes();
    ModeVector x(d, 0.0);
    for (std::size_t j = 0; j < initial_state.size() && j < d; ++j) x[j] = initial_state[j];
    return x;
}

double ExperimentConfig::resolved_window_length() const {
    return window_length > 0.0 ? window_length : 8.0 / operator_spec().omega();
}

bool ExperimentConfig::wants(const std::string& format) const {
    return std::find(output_formats.begin(), output_formats.end(), format) != output_formats.end();
}

void validate_config(const ExperimentConfig& c) {
    if (c.operator_family == "explicit") {
        if (c.eigenvalues.empty()) {
            throw ConfigError(0, "operator.eigenvalues", "explicit family needs an eigenvalue list");
        }
    } else if (!c.eigenvalues.empty()) {
        throw ConfigError(0, "operator.eigenvalues", "eigenvalues are only used with operator.family = explicit");
    }
    if (c.operator_family == "laplacian" && c.modes == 0) {
        throw ConfigError(0, "operator.d", "mode count must be positive");
    }
    OperatorSpec spec = [&] {
        try {
            return c.operator_spec();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(0, "operator", e.what());
        }
    }();
    try {
        c.drift_spec().validate(spec);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(0, "drift", e.what());
    }
    if (c.initial_state.size() > spec.modes()) {
        throw ConfigError(0, "state.x", "initial state has more entries than modes");
    }
    if (!(c.horizon > 0.0)) throw ConfigError(0, "grid.T", "horizon must be positive");
    if (c.steps < 2) throw ConfigError(0, "grid.N", "need at least 2 steps");
    if (c.window_length < 0.0) throw ConfigError(0, "window.S", "window length must be >= 0 (0 selects 8/omega)");
    if (c.window_steps < 2) throw ConfigError(0, "window.N", "need at least 2 steps");
    if (c.samples < 2) throw ConfigError(0, "mc.samples", "need at least 2 samples");
    if (c.workers == 0) throw ConfigError(0, "mc.workers", "need at least one worker");
    for (std::size_t n : c.sweep_steps) {
        if (n < 2) throw ConfigError(0, "sweep.N", "every sweep resolution needs at least 2 steps");
    }
    for (int n : c.moment_orders) {
        if (n < 1) throw ConfigError(0, "moments.orders", "moment orders must be >= 1");
    }
    if (c.bandwidth < 0.0) throw ConfigError(0, "density.bandwidth", "bandwidth must be >= 0 (0 selects Silverman)");
    if (c.density_points < 1) throw ConfigError(0, "density.points", "need at least one evaluation point");
    if (c.long_run_chains < 2) throw ConfigError(0, "long_run.chains", "need at least two chains");
    if (!(c.long_run_averaging > 0.0) || c.long_run_burn_in < 0.0) {
        throw ConfigError(0, "long_run", "averaging time must be positive and burn-in non-negative");
    }
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
    auto u = [](auto v) { return std::to_string(v); };
    auto d = [](double v) { return format_double(v); };
    std::vector<std::pair<std::string, std::string>> e{
        {"experiment", c.experiment},
        {"operator.family", c.operator_family},
        {"operator.d", u(c.modes)},
    };
    if (!c.eigenvalues.empty()) e.emplace_back("operator.eigenvalues", join_values(c.eigenvalues, d));
    e.insert(e.end(), {
        {"operator.beta", d(c.beta)},
        {"operator.epsilon", d(c.epsilon)},
        {"drift.kind", to_string(c.drift_kind)},
        {"drift.c", d(c.drift_c)},
        {"drift.amplitude", d(c.drift_amplitude)},
        {"drift.scale", d(c.drift_scale)},
    });
    if (!c.initial_state.empty()) e.emplace_back("state.x", join_values(c.initial_state, d));
    e.insert(e.end(), {
        {"grid.T", d(c.horizon)},
        {"grid.N", u(c.steps)},
        {"window.S", d(c.window_length)},
        {"window.N", u(c.window_steps)},
        {"mc.samples", u(c.samples)},
        {"mc.seed", u(c.seed)},
        {"mc.workers", u(c.workers)},
        {"mc.self_normalized", c.self_normalized ? "true" : "false"},
        {"sweep.N", join_values(c.sweep_steps, u)},
        {"moments.orders", join_values(c.moment_orders, u)},
        {"density.bandwidth", d(c.bandwidth)},
        {"density.points", u(c.density_points)},
        {"long_run.chains", u(c.long_run_chains)},
        {"long_run.burn_in", d(c.long_run_burn_in)},
        {"long_run.averaging", d(c.long_run_averaging)},
        {"regularity.draws", u(c.regularity_draws)},
        {"output.directory", c.output_directory},
        {"output.formats", join(c.output_formats)},
        {"output.dump_paths", c.dump_paths ? "true" : "false"},
    });
    return e;
}

std::string to_config_text(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "# mildgirsanov configuration echo\n";
    for (const auto& [k, v] : config_entries(c)) os << k << " = " << v << '\n';
    return os.str();
}

}  // namespace mg
