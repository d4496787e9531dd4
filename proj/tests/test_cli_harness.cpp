#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mildgirsanov/config.hpp"
#include "mildgirsanov/experiments.hpp"
#include "mildgirsanov/log.hpp"
#include "mildgirsanov/report.hpp"

using namespace mg;

namespace {

// Small sizes so every experiment runs in well under a second.
ExperimentConfig small(const std::string& experiment, DriftKind kind) {
    ExperimentConfig c;
    c.experiment = experiment;
    c.modes = 2;
    c.drift_kind = kind;
    c.steps = 32;
    c.window_length = 4.0;
    c.window_steps = 32;
    c.samples = 400;
    c.seed = 5;
    c.sweep_steps = {16, 32, 64};
    c.density_points = 3;
    c.long_run_chains = 4;
    c.long_run_burn_in = 1.0;
    c.long_run_averaging = 5.0;
    c.regularity_draws = 20;
    c.initial_state = {1.0};
    return c;
}

std::vector<std::string> names_of(const RunReport& r) {
    std::vector<std::string> out;
    for (const auto& c : r.checks) out.push_back(c.name);
    return out;
}

std::vector<double> values_of(const RunReport& r) {
    std::vector<double> out;
    for (const auto& c : r.checks) out.push_back(c.value);
    return out;
}

}  // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig c = parse_config(
        "# comment\n"
        "experiment = invariant\n"
        "operator.d = 4   # trailing comment\n"
        "drift.kind = linear\n"
        "drift.c = -1\n"
        "state.x = 1, 0.5\n"
        "grid.N = 128\n"
        "sweep.N = 32,64\n"
        "output.formats = csv, svg\n");
    CHECK(c.experiment == "invariant");
    CHECK(c.modes == 4);
    CHECK(c.drift_kind == DriftKind::linear);
    CHECK(c.drift_c == -1.0);
    CHECK(c.state() == ModeVector{1.0, 0.5, 0.0, 0.0});
    CHECK(c.steps == 128);
    CHECK(c.sweep_steps == std::vector<std::size_t>{32, 64});
    CHECK(c.wants("svg"));
    CHECK_FALSE(c.wants("json"));
    CHECK(c.operator_spec().eigenvalues() == std::vector<double>{1, 4, 9, 16});
    CHECK(c.resolved_window_length() == 8.0);

    const ExperimentConfig e = parse_config("operator.family = explicit\noperator.eigenvalues = 2, 3\n");
    CHECK(e.operator_spec().eigenvalues() == std::vector<double>{2, 3});
}

TEST_CASE("config errors carry line and key") {
    auto error_of = [](const std::string& text) -> std::pair<std::size_t, std::string> {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return {e.line(), e.key()};
        }
        return {0, "no error"};
    };
    CHECK(error_of("operator.d = 2\ngrid.steps = 4\n") == std::pair<std::size_t, std::string>{2, "grid.steps"});
    CHECK(error_of("grid.N = x\n") == std::pair<std::size_t, std::string>{1, "grid.N"});
    CHECK(error_of("grid.N = 8\ngrid.N = 16\n") == std::pair<std::size_t, std::string>{2, "grid.N"});
    CHECK(error_of("\n\nno equals sign\n").first == 3);
    CHECK(error_of("experiment = nope\n").second == "experiment");
    CHECK(error_of("drift.kind = linear\ndrift.c = 1\n").second == "drift");
    CHECK(error_of("operator.beta = 1.5\n").second == "operator");
    CHECK(error_of("operator.d = 1\nstate.x = 1, 2\n").second == "state.x");
    CHECK(error_of("output.formats = csv, pdf\n").second == "output.formats");
    CHECK_THROWS_AS(load_config("/nonexistent/config"), ConfigError);
}

TEST_CASE("config text round trip") {
    ExperimentConfig c = small("density-ratio", DriftKind::bounded_tanh);
    c.drift_amplitude = 0.1 + 0.2;  // not exactly representable as a short decimal
    c.epsilon = 1.0 / 3.0;
    c.output_formats = {"csv", "json", "svg"};
    const ExperimentConfig back = parse_config(to_config_text(c));
    CHECK(to_config_text(back) == to_config_text(c));
    CHECK(back.drift_amplitude == c.drift_amplitude);
    CHECK(back.epsilon == c.epsilon);
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("CSV formatting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_number(0.1) == "0.10000000000000001");
    CHECK(std::stod(csv_number(1.0 / 3.0)) == 1.0 / 3.0);
    std::ostringstream os;
    write_table_csv(os, Table{"t", {"x", "label"}, {{"1", "a,b"}}});
    CHECK(os.str() == "x,label\r\n1,\"a,b\"\r\n");
}

TEST_CASE("check records and exit status") {
    RunReport r;
    r.checks.push_back(closeness_check("close", 1.01, 1.0, 0.02));
    r.checks.push_back(bound_check("bound", 0.5, 1.0));
    r.checks.push_back(recorded("note", 3.0));
    CHECK(r.passed());
    CHECK(exit_status(r) == 0);
    r.checks.push_back(closeness_check("far", 2.0, 1.0, 0.5));
    CHECK_FALSE(r.passed());
    CHECK(exit_status(r) == 1);
    REQUIRE(r.find("far") != nullptr);
    CHECK(r.find("far")->status == CheckStatus::fail);
    CHECK(r.find("missing") == nullptr);
}

TEST_CASE("every experiment emits exactly its manifest") {
    set_warnings_enabled(false);
    const std::vector<std::pair<std::string, DriftKind>> cases{
        {"verify-girsanov", DriftKind::zero},   {"verify-girsanov", DriftKind::linear},
        {"verify-girsanov", DriftKind::bounded_tanh}, {"verify-kernel", DriftKind::zero},
        {"moment-bounds", DriftKind::bounded_tanh},   {"invariant", DriftKind::zero},
        {"invariant", DriftKind::linear},             {"invariant", DriftKind::bounded_tanh},
        {"density-ratio", DriftKind::linear},         {"density-ratio", DriftKind::bounded_tanh},
        {"regularity", DriftKind::bounded_tanh},      {"convergence-sweep", DriftKind::zero},
        {"convergence-sweep", DriftKind::linear},     {"convergence-sweep", DriftKind::bounded_tanh},
    };
    for (const auto& [experiment, kind] : cases) {
        CAPTURE(experiment);
        const ExperimentConfig c = small(experiment, kind);
        const RunReport r = run(c);
        const auto names = names_of(r);
        CHECK(names == experiment_manifest(c));
        CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
    }
    ExperimentConfig colored = small("colored", DriftKind::bounded_tanh);
    colored.epsilon = 0.5;
    CHECK(names_of(run(colored)) == experiment_manifest(colored));
    set_warnings_enabled(true);
}

TEST_CASE("zero drift verify-girsanov passes trivially") {
    const RunReport r = run(small("verify-girsanov", DriftKind::zero));
    CHECK(r.passed());
    CHECK(r.find("zero_drift_unit_weights")->value == 0.0);
}

TEST_CASE("experiments reject configurations they cannot run") {
    CHECK_THROWS_AS(run(small("moment-bounds", DriftKind::linear)), ConfigError);
    CHECK_THROWS_AS(run(small("colored", DriftKind::zero)), ConfigError);
    ExperimentConfig c = small("invariant", DriftKind::zero);
    c.epsilon = 0.5;
    CHECK_THROWS_AS(run(c), ConfigError);
}

TEST_CASE("results do not depend on the worker count") {
    set_warnings_enabled(false);
    for (const char* e : {"verify-girsanov", "invariant", "density-ratio", "regularity"}) {
        CAPTURE(e);
        ExperimentConfig c = small(e, DriftKind::bounded_tanh);
        c.workers = 1;
        const RunReport a = run(c);
        c.workers = 3;
        const RunReport b = run(c);
        CHECK(values_of(a) == values_of(b));
        REQUIRE(a.tables.size() == b.tables.size());
        for (std::size_t t = 0; t < a.tables.size(); ++t) CHECK(a.tables[t].rows == b.tables[t].rows);
    }
    set_warnings_enabled(true);
}

TEST_CASE("outputs and config echo round trip") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mildgirsanov-unit-out";
    fs::remove_all(dir);
    ExperimentConfig c = small("verify-girsanov", DriftKind::bounded_tanh);
    c.output_directory = dir.string();
    c.output_formats = {"csv", "json", "svg"};
    c.dump_paths = true;
    const RunReport r = run(c);
    write_outputs(r);
    for (const char* f : {"config.echo", "report.json", "checks.csv", "estimator_agreement.csv", "paths.csv"}) {
        CHECK(fs::exists(dir / f));
    }

    std::ifstream js(dir / "report.json");
    const nlohmann::json j = nlohmann::json::parse(js);
    CHECK(j["schema"] == "mild-girsanov/1");
    CHECK(j["experiment"] == "verify-girsanov");
    CHECK(j["checks"].size() == r.checks.size());
    CHECK(j["params"]["mc.seed"] == "5");
    for (const auto& rec : j["records"]) {
        for (const char* key : {"experiment", "params", "value", "std_error", "ess", "n", "seed", "wall_time_ms"}) {
            CHECK(rec.contains(key));
        }
    }

    std::ifstream paths(dir / "paths.csv");
    std::string header;
    std::getline(paths, header);
    CHECK(header == "sample_id,mode,node_index,time,h,dB\r");

    // Rerunning from the echoed config reproduces every number.
    const RunReport again = run(load_config((dir / "config.echo").string()));
    CHECK(values_of(again) == values_of(r));
    fs::remove_all(dir);
}

TEST_CASE("svg plots are emitted for the sweep") {
    const RunReport r = run(small("convergence-sweep", DriftKind::linear));
    REQUIRE(r.plots.size() == 1);
    const std::string svg = render_svg(r.plots[0]);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
}
