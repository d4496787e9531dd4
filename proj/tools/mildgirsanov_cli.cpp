// Command-line front end: `mildgirsanov <experiment> [--config PATH] [--seed U64] [--out DIR] [--workers K]`.
// MILD_GIRSANOV_SEED overrides the configured seed; --seed wins over the environment.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "mildgirsanov/config.hpp"
#include "mildgirsanov/experiments.hpp"
#include "mildgirsanov/log.hpp"
#include "mildgirsanov/report.hpp"

namespace {

constexpr int kConfigError = 2;

void print_config_error(const mg::ConfigError& e) { std::cerr << "config error: " << e.what() << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo verification of the mild Girsanov transform for SPDEs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mg::kArtifactVersion);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> workers;
    bool dump_paths = false;
    bool quiet = false;

    for (const auto& name : mg::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master seed (overrides config and MILD_GIRSANOV_SEED)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->add_flag("--dump-paths", dump_paths, "write a CSV of the first sampled paths");
        sub->add_flag("--quiet", quiet, "suppress warnings on stderr");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }
    mg::set_warnings_enabled(!quiet);

    const std::string experiment = app.get_subcommands().front()->get_name();
    mg::ExperimentConfig config;
    try {
        if (!config_path.empty()) config = mg::load_config(config_path);
        config.experiment = experiment;
        if (const char* env = std::getenv("MILD_GIRSANOV_SEED"); env && *env) {
            mg::set_config_value(config, "mc.seed", env);
        }
        if (seed) config.seed = *seed;
        if (out_dir) config.output_directory = *out_dir;
        if (workers) config.workers = *workers;
        if (dump_paths) config.dump_paths = true;
        mg::validate_config(config);

        const mg::RunReport report = mg::run(config);
        mg::write_outputs(report);
        mg::write_summary(std::cout, report);
        return mg::exit_status(report);
    } catch (const mg::ConfigError& e) {
        print_config_error(e);
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfigError;
    }
}
