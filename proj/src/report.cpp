#include "mildgirsanov/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include <json.hpp>

namespace mg {

std::string to_string(CheckStatus status) {
    switch (status) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::fail: return "fail";
        case CheckStatus::recorded: return "recorded";
    }
    return "unknown";
}

bool RunReport::passed() const noexcept {
    for (const auto& c : checks) {
        if (c.status == CheckStatus::fail) return false;
    }
    return true;
}

const CheckRecord* RunReport::find(const std::string& name) const noexcept {
    for (const auto& c : checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

CheckRecord closeness_check(std::string name, const Estimate& e, double reference, double tolerance) {
    CheckRecord c = closeness_check(std::move(name), e.value, reference, tolerance);
    c.std_error = e.std_error;
    c.estimate = e;
    return c;
}

CheckRecord closeness_check(std::string name, double value, double reference, double tolerance) {
    CheckRecord c;
    c.name = std::move(name);
    c.value = value;
    c.reference = reference;
    c.tolerance = tolerance;
    c.status = std::abs(value - reference) <= tolerance ? CheckStatus::pass : CheckStatus::fail;
    return c;
}

CheckRecord bound_check(std::string name, double value, double bound, double std_error) {
    CheckRecord c;
    c.name = std::move(name);
    c.value = value;
    c.std_error = std_error;
    c.reference = bound;
    c.status = value <= bound ? CheckStatus::pass : CheckStatus::fail;
    return c;
}

CheckRecord recorded(std::string name, double value, double std_error) {
    CheckRecord c;
    c.name = std::move(name);
    c.value = value;
    c.std_error = std_error;
    c.status = CheckStatus::recorded;
    return c;
}

std::string csv_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string csv_field(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_table_csv(std::ostream& out, const Table& table) {
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        out << (i ? "," : "") << csv_field(table.columns[i]);
    }
    out << "\r\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
        out << "\r\n";
    }
}

void write_checks_csv(std::ostream& out, const RunReport& report) {
    Table t{"checks", {"name", "value", "std_error", "reference", "tolerance", "status", "ess", "n"}, {}};
    for (const auto& c : report.checks) {
        t.rows.push_back({c.name, csv_number(c.value), csv_number(c.std_error), csv_number(c.reference),
                          csv_number(c.tolerance), to_string(c.status),
                          c.estimate ? csv_number(c.estimate->ess) : "",
                          c.estimate ? std::to_string(c.estimate->n) : ""});
    }
    write_table_csv(out, t);
}

namespace {

nlohmann::json number(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

}  // namespace

void write_report_json(std::ostream& out, const RunReport& report) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : config_entries(report.config)) params[k] = v;

    nlohmann::ordered_json j;
    j["schema"] = kReportSchema;
    j["version"] = report.version;
    j["experiment"] = report.config.experiment;
    j["params"] = params;
    j["passed"] = report.passed();
    j["wall_time_ms"] = report.wall_time_ms;

    auto checks = nlohmann::ordered_json::array();
    auto records = nlohmann::ordered_json::array();
    for (const auto& c : report.checks) {
        nlohmann::ordered_json cj;
        cj["name"] = c.name;
        cj["value"] = number(c.value);
        cj["std_error"] = number(c.std_error);
        cj["reference"] = number(c.reference);
        cj["tolerance"] = number(c.tolerance);
        cj["status"] = to_string(c.status);
        checks.push_back(cj);
        if (c.estimate) {
            nlohmann::ordered_json r;
            r["experiment"] = report.config.experiment;
            r["params"] = {{"check", c.name}};
            r["value"] = number(c.estimate->value);
            r["std_error"] = number(c.estimate->std_error);
            r["ess"] = number(c.estimate->ess);
            r["n"] = c.estimate->n;
            r["seed"] = report.config.seed;
            r["wall_time_ms"] = report.wall_time_ms;
            records.push_back(r);
        }
    }
    j["checks"] = checks;
    j["records"] = records;
    out << j.dump(2) << '\n';
}

void write_summary(std::ostream& out, const RunReport& report) {
    out << "experiment " << report.config.experiment << " (" << report.checks.size() << " checks, "
        << std::fixed << std::setprecision(0) << report.wall_time_ms << " ms)\n";
    out.unsetf(std::ios::floatfield);
    std::size_t width = 4;
    for (const auto& c : report.checks) width = std::max(width, c.name.size());
    for (const auto& c : report.checks) {
        out << std::left << std::setw(static_cast<int>(width) + 2) << c.name << std::right << std::setw(9)
            << to_string(c.status) << "  value " << std::setprecision(8) << c.value;
        if (c.std_error > 0.0) out << " +/- " << std::setprecision(3) << c.std_error;
        if (c.status != CheckStatus::recorded) out << "  ref " << std::setprecision(8) << c.reference;
        out << '\n';
    }
    out << (report.passed() ? "PASS" : "FAIL") << '\n';
}

void write_path_csv(std::ostream& out, const TimeGrid& grid, const std::vector<GaussianPathSample>& samples) {
    out << "sample_id,mode,node_index,time,h,dB\r\n";
    for (const auto& s : samples) {
        for (std::size_t j = 0; j < s.h.modes(); ++j) {
            for (std::size_t k = 0; k < s.h.columns(); ++k) {
                out << s.index << ',' << j + 1 << ',' << k << ',' << csv_number(grid.node(k)) << ','
                    << csv_number(s.h(j, k)) << ',';
                if (k < s.db.columns()) out << csv_number(s.db(j, k));
                out << "\r\n";
            }
        }
    }
}

void write_outputs(const RunReport& report) {
    namespace fs = std::filesystem;
    const fs::path dir(report.config.output_directory);
    fs::create_directories(dir);
    auto open = [&](const std::string& file) {
        std::ofstream f(dir / file, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / file).string());
        return f;
    };
    {
        auto f = open("config.echo");
        f << to_config_text(report.config);
    }
    if (report.config.wants("json")) {
        auto f = open("report.json");
        write_report_json(f, report);
    }
    if (report.config.wants("csv")) {
        auto f = open("checks.csv");
        write_checks_csv(f, report);
        for (const auto& t : report.tables) {
            auto tf = open(t.name + ".csv");
            write_table_csv(tf, t);
        }
    }
    if (report.config.wants("svg")) {
        for (const auto& p : report.plots) {
            auto f = open(p.name + ".svg");
            f << render_svg(p);
        }
    }
}

}  // namespace mg
