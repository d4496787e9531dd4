#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mildgirsanov/spectral_model.hpp"

namespace mg {

/// Flat `section.key = value` configuration. Lines starting with '#' are comments,
/// lists are comma separated.
struct ExperimentConfig {
    std::string experiment = "verify-girsanov";

    std::string operator_family = "laplacian";  // laplacian | explicit
    std::size_t modes = 8;
    std::vector<double> eigenvalues;             // explicit family only
    double beta = 0.25;
    double epsilon = 0.0;

    DriftKind drift_kind = DriftKind::zero;
    double drift_c = -0.5;
    double drift_amplitude = 0.5;
    double drift_scale = 1.0;

    std::vector<double> initial_state;  // padded with zeros up to d

    double horizon = 1.0;
    std::size_t steps = 256;
    double window_length = 0.0;  // 0 means 8 / omega
    std::size_t window_steps = 256;

    std::size_t samples = 20000;
    std::uint64_t seed = 20261018;
    unsigned workers = 1;
    bool self_normalized = false;

    std::vector<std::size_t> sweep_steps{64, 128, 256, 512};
    std::vector<int> moment_orders{1, 2, 3};
    double bandwidth = 0.0;  // 0 means Silverman's rule
    std::size_t density_points = 9;
    std::size_t long_run_chains = 64;
    double long_run_burn_in = 10.0;
    double long_run_averaging = 100.0;
    std::size_t regularity_draws = 1000;

    std::string output_directory = "mildgirsanov-out";
    std::vector<std::string> output_formats{"csv", "json"};
    bool dump_paths = false;

    OperatorSpec operator_spec() const;
    DriftSpec drift_spec() const;
    ModeVector state() const;
    double resolved_window_length() const;
    bool wants(const std::string& format) const;
};

/// Config problems carry the offending line (0 when not tied to a line) and key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::string key, const std::string& message);
    std::size_t line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    std::size_t line_;
    std::string key_;
};

const std::vector<std::string>& experiment_names();

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Applies one `key = value` assignment; used by the parser and by CLI overrides.
void set_config_value(ExperimentConfig& config, const std::string& key, const std::string& value,
                      std::size_t line = 0);

/// Re-validates every upstream constraint (operator, drift, grid, window, output).
void validate_config(const ExperimentConfig& config);

/// Canonical text form; parse_config(to_config_text(c)) reproduces c.
std::string to_config_text(const ExperimentConfig& config);

/// Every key with its canonical value, in file order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

/// Shortest text that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace mg
