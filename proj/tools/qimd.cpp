// qimd: batch front-end for the noisy-interferometer analytics, working-point
// search, Monte-Carlo validation, and sweep/table reproduction.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "qimd/runner.hpp"

namespace {

using qimd::Json;

std::string read_config_text(const std::string& path) {
    if (path == "-") {
        std::ostringstream buffer;
        buffer << std::cin.rdbuf();
        return buffer.str();
    }
    std::ifstream in(path);
    if (!in) throw qimd::InvalidInput("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw qimd::InvalidInput("cannot open output file: " + path);
    out << content;
}

// sweep.csv -> sweep.boundary.csv, report.json -> report.record.csv, ...
std::string with_suffix(const std::string& path, const std::string& suffix) {
    const auto dot = path.find_last_of('.');
    const auto slash = path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + suffix;
    }
    return path.substr(0, dot) + suffix;
}

void emit_error(int code, const std::string& message) {
    Json err;
    err["error"] = Json{{"code", code}, {"message", message}};
    std::cerr << err.dump() << "\n";
}

int dispatch(const qimd::RunConfig& config) {
    const std::string hash = qimd::config_hash(config);
    switch (config.command) {
        case qimd::Command::Analytic: {
            const auto result = qimd::run_analytic(config);
            if (config.output.format == qimd::OutputFormat::Json) {
                write_output(config.output.path,
                             qimd::analytic_to_json(result, hash).dump(2) + "\n");
            } else {
                write_output(config.output.path, qimd::analytic_to_csv(result, hash));
            }
            return qimd::kExitOk;
        }
        case qimd::Command::Wp: {
            const auto result = qimd::run_wp(config);
            const Json j = qimd::wp_to_json(result, hash);
            if (config.output.format == qimd::OutputFormat::Json) {
                write_output(config.output.path, j.dump(2) + "\n");
            } else {
                write_output(config.output.path, qimd::single_row_csv(j, hash));
            }
            return qimd::kExitOk;
        }
        case qimd::Command::Mc: {
            const auto result = qimd::run_mc(config);
            write_output(config.output.path, result.report.dump(2) + "\n");
            if (result.record_csv) {
                if (config.output.path.empty()) {
                    std::cout << *result.record_csv;
                } else {
                    write_output(with_suffix(config.output.path, ".record.csv"),
                                 *result.record_csv);
                    write_output(with_suffix(config.output.path, ".record.json"),
                                 *result.record_sidecar);
                }
            }
            return result.inconclusive ? qimd::kExitInconclusive : qimd::kExitOk;
        }
        case qimd::Command::Sweep: {
            if (config.output.format != qimd::OutputFormat::Csv) {
                throw qimd::InvalidInput("sweep emits CSV only");
            }
            const auto result = qimd::run_sweep(config);
            write_output(config.output.path, result.main_csv);
            if (result.boundary_csv) {
                if (config.output.path.empty()) {
                    std::cout << *result.boundary_csv;
                } else {
                    write_output(with_suffix(config.output.path, ".boundary.csv"),
                                 *result.boundary_csv);
                }
            }
            return qimd::kExitOk;
        }
        case qimd::Command::Tables: {
            if (config.output.format != qimd::OutputFormat::Csv) {
                throw qimd::InvalidInput("tables emits CSV only");
            }
            write_output(config.output.path, qimd::run_tables(config));
            return qimd::kExitOk;
        }
    }
    return qimd::kExitConfigError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noisy interferometer phase-uncertainty toolkit"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // accept global flags after the subcommand name

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_path;
    std::optional<std::string> format;
    std::optional<int> workers;

    app.add_option("--config", config_path, "config JSON file, or '-' for stdin");
    app.add_option("--seed", seed, "override the Monte-Carlo seed");
    app.add_option("--out", out_path, "output path (default: stdout)");
    app.add_option("--format", format, "output format: csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    app.add_option("--workers", workers, "worker threads for sweeps and MC trials");

    std::optional<qimd::Command> command;
    for (const char* name : {"analytic", "wp", "mc", "sweep", "tables"}) {
        app.add_subcommand(name, "")->callback(
            [&command, name] { command = qimd::command_from_string(name); });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        if (config_path.empty()) {
            throw qimd::InvalidInput("a config is required (--config PATH or --config -)");
        }
        Json doc;
        try {
            doc = Json::parse(read_config_text(config_path));
        } catch (const Json::exception& e) {
            throw qimd::InvalidInput(std::string("config: invalid JSON: ") + e.what());
        }
        qimd::RunConfig config = qimd::config_from_json(doc);
        if (command) config.command = *command;
        if (seed) config.mc.seed = *seed;
        if (out_path) config.output.path = *out_path;
        if (format) {
            config.output.format =
                *format == "json" ? qimd::OutputFormat::Json : qimd::OutputFormat::Csv;
        }
        if (workers) {
            if (*workers < 1) throw qimd::InvalidInput("workers must be >= 1");
            config.workers = *workers;
        }
        return dispatch(config);
    } catch (const qimd::InvalidInput& e) {
        emit_error(qimd::kExitConfigError, e.what());
        return qimd::kExitConfigError;
    } catch (const qimd::NumericError& e) {
        emit_error(qimd::kExitNumericError, e.what());
        return qimd::kExitNumericError;
    } catch (const std::exception& e) {
        emit_error(qimd::kExitNumericError, e.what());
        return qimd::kExitNumericError;
    }
}
