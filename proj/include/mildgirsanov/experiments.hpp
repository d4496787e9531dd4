#pragma once

#include <span>
#include <string>
#include <vector>

#include "mildgirsanov/config.hpp"
#include "mildgirsanov/report.hpp"

namespace mg {

/// Runs the configured experiment. Throws ConfigError for configurations the
/// experiment cannot run (e.g. a bound experiment with an unbounded drift).
RunReport run(const ExperimentConfig& config);

/// verify-girsanov across the given step counts with the configured seed.
RunReport convergence_sweep(const ExperimentConfig& config, std::span<const std::size_t> steps);

/// Exact list of check names `run(config)` emits, in order.
std::vector<std::string> experiment_manifest(const ExperimentConfig& config);

/// Exit status for a finished run: 0 when every asserted check passed, 1 otherwise.
int exit_status(const RunReport& report) noexcept;

}  // namespace mg
