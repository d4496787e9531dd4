#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mildgirsanov/config.hpp"
#include "mildgirsanov/estimate.hpp"
#include "mildgirsanov/path_space.hpp"
#include "mildgirsanov/svg_plot.hpp"

namespace mg {

inline constexpr const char* kReportSchema = "mild-girsanov/1";
inline constexpr const char* kArtifactVersion = "1.0.0";

enum class CheckStatus { pass, fail, recorded };

std::string to_string(CheckStatus status);

struct CheckRecord {
    std::string name;
    double value = 0.0;
    double std_error = 0.0;
    double reference = 0.0;  // bound or oracle value
    double tolerance = 0.0;  // allowed |value - reference| (or slack for bounds)
    CheckStatus status = CheckStatus::recorded;
    std::optional<Estimate> estimate;
};

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct RunReport {
    ExperimentConfig config;
    std::vector<CheckRecord> checks;
    std::vector<Table> tables;
    std::vector<LinePlot> plots;
    double wall_time_ms = 0.0;
    std::string version = kArtifactVersion;

    bool passed() const noexcept;
    const CheckRecord* find(const std::string& name) const noexcept;
};

/// |value - reference| <= tolerance.
CheckRecord closeness_check(std::string name, const Estimate& e, double reference, double tolerance);
CheckRecord closeness_check(std::string name, double value, double reference, double tolerance);
/// value <= bound.
CheckRecord bound_check(std::string name, double value, double bound, double std_error = 0.0);
CheckRecord recorded(std::string name, double value, double std_error = 0.0);

/// 17 significant digits, '.' decimal separator.
std::string csv_number(double value);
/// RFC 4180 quoting when the field needs it.
std::string csv_field(const std::string& field);

void write_table_csv(std::ostream& out, const Table& table);
void write_checks_csv(std::ostream& out, const RunReport& report);
void write_report_json(std::ostream& out, const RunReport& report);
void write_summary(std::ostream& out, const RunReport& report);

/// Writes report.json, checks.csv, one CSV per table, SVG plots and config.echo
/// into the configured output directory, honoring output.formats.
void write_outputs(const RunReport& report);

/// Debug dump: sample_id, mode, node_index, time, h, dB.
void write_path_csv(std::ostream& out, const TimeGrid& grid, const std::vector<GaussianPathSample>& samples);

}  // namespace mg
