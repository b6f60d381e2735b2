#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qimd/errors.hpp"
#include "qimd/fringe.hpp"
#include "qimd/scan.hpp"
#include "qimd/statistics.hpp"
#include "qimd/working_point.hpp"

namespace qimd {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal representation; locale-independent.
inline std::string format_double(double value) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class Command { Analytic, Wp, Mc, Sweep, Tables };
enum class OutputFormat { Csv, Json };
enum class McKind { Variance, Distillation, WorkingPoint };

namespace detail {

inline const Json& require_field(const Json& j, const char* key, const char* where) {
    const auto it = j.find(key);
    if (it == j.end()) {
        throw InvalidInput(std::string("config: missing field '") + key + "' in " + where);
    }
    return *it;
}

template <typename T>
inline T field_or(const Json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

}  // namespace detail

inline std::string to_string(PhotonStatistics stats) {
    return stats == PhotonStatistics::Thermal ? "thermal" : "poissonian";
}

inline PhotonStatistics statistics_from_string(const std::string& s) {
    if (s == "poissonian") return PhotonStatistics::Poissonian;
    if (s == "thermal") return PhotonStatistics::Thermal;
    throw InvalidInput("config: unknown statistics '" + s + "'");
}

inline std::string to_string(InterferometerKind kind) {
    return kind == InterferometerKind::Mzi ? "mzi" : "nli";
}

inline InterferometerKind kind_from_string(const std::string& s) {
    if (s == "mzi") return InterferometerKind::Mzi;
    if (s == "nli") return InterferometerKind::Nli;
    throw InvalidInput("config: unknown interferometer kind '" + s + "'");
}

inline Json spec_to_json(const InterferometerSpec& spec) {
    Json j;
    if (const auto* mzi = std::get_if<MziSpec>(&spec)) {
        j["kind"] = "mzi";
        j["n0"] = mzi->n0;
        j["t1"] = mzi->t1;
        j["t2"] = mzi->t2;
    } else {
        const auto& nli = std::get<NliSpec>(spec);
        j["kind"] = "nli";
        j["n0"] = nli.n0;
        j["n0p"] = nli.n0p;
    }
    return j;
}

inline InterferometerSpec spec_from_json(const Json& j) {
    const std::string kind = detail::require_field(j, "kind", "interferometer").get<std::string>();
    if (kind == "mzi") {
        MziSpec mzi;
        mzi.n0 = detail::require_field(j, "n0", "interferometer").get<double>();
        mzi.t1 = detail::field_or(j, "t1", 0.5);
        mzi.t2 = detail::field_or(j, "t2", 0.5);
        mzi.validate();
        return mzi;
    }
    if (kind == "nli") {
        NliSpec nli;
        nli.n0 = detail::require_field(j, "n0", "interferometer").get<double>();
        nli.n0p = detail::field_or(j, "n0p", nli.n0);
        nli.validate();
        return nli;
    }
    throw InvalidInput("config: unknown interferometer kind '" + kind + "'");
}

inline Json noise_to_json(const NoiseChannel& noise) {
    Json j;
    j["eta"] = noise.eta;
    j["mean"] = noise.mean_noise;
    j["stats"] = to_string(noise.stats);
    return j;
}

inline NoiseChannel noise_from_json(const Json& j) {
    NoiseChannel noise;
    noise.eta = detail::field_or(j, "eta", 1.0);
    noise.mean_noise = detail::field_or(j, "mean", 0.0);
    noise.stats = statistics_from_string(detail::field_or<std::string>(j, "stats", "poissonian"));
    noise.validate();
    return noise;
}

// Axis given either as an explicit list or as {min, max, count, scale}.
struct AxisSpec {
    std::vector<double> explicit_values;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
    bool log_scale = false;

    bool is_explicit() const noexcept { return !explicit_values.empty(); }

    std::vector<double> values() const {
        if (is_explicit()) return explicit_values;
        if (count <= 0) return {};
        if (count == 1) return {min};
        std::vector<double> out(static_cast<std::size_t>(count));
        if (log_scale) {
            if (!(min > 0.0 && max > 0.0)) {
                throw InvalidInput("config: log axis requires positive bounds");
            }
            const double lo = std::log(min);
            const double hi = std::log(max);
            for (int i = 0; i < count; ++i) {
                out[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / (count - 1));
            }
            out.front() = min;
            out.back() = max;
        } else {
            for (int i = 0; i < count; ++i) {
                out[static_cast<std::size_t>(i)] = min + (max - min) * i / (count - 1);
            }
        }
        return out;
    }
};

inline Json axis_to_json(const AxisSpec& axis) {
    if (axis.is_explicit()) return Json(axis.explicit_values);
    Json j;
    j["min"] = axis.min;
    j["max"] = axis.max;
    j["count"] = axis.count;
    j["scale"] = axis.log_scale ? "log" : "linear";
    return j;
}

inline AxisSpec axis_from_json(const Json& j, const char* where) {
    AxisSpec axis;
    if (j.is_array()) {
        axis.explicit_values = j.get<std::vector<double>>();
        return axis;
    }
    if (!j.is_object()) throw InvalidInput(std::string("config: axis '") + where + "' must be a list or range");
    axis.min = detail::require_field(j, "min", where).get<double>();
    axis.max = detail::require_field(j, "max", where).get<double>();
    axis.count = detail::require_field(j, "count", where).get<int>();
    const std::string scale = detail::field_or<std::string>(j, "scale", "linear");
    if (scale != "linear" && scale != "log") {
        throw InvalidInput("config: axis scale must be 'linear' or 'log'");
    }
    axis.log_scale = scale == "log";
    return axis;
}

struct McConfig {
    McKind kind = McKind::Variance;
    int shots = 1000;
    std::uint64_t trials = 10000;
    std::optional<std::uint64_t> seed;
    double true_phase = 0.7;
    double probe_phase = 1.5707963267948966;
    bool emit_record = true;
    bool exact_means = false;
};

struct SweepConfig {
    InterferometerKind kind = InterferometerKind::Nli;
    AxisSpec eta;
    AxisSpec n0;
    PhotonStatistics noise_stats = PhotonStatistics::Thermal;
    PhotonStatistics boundary_stats = PhotonStatistics::Poissonian;
    bool boundary = true;
    int steps = 1;
};

struct OutputConfig {
    std::string path;  // empty: stdout
    OutputFormat format = OutputFormat::Csv;
};

struct RunConfig {
    Command command = Command::Analytic;
    InterferometerSpec spec = MziSpec{};
    NoiseChannel noise;
    int scan_steps = 8;
    double theta_jitter = 0.0;
    double probe_phase = 1.5707963267948966;
    McConfig mc;
    SweepConfig sweep;
    OutputConfig output;
    int workers = 1;
};

inline std::string to_string(Command c) {
    switch (c) {
        case Command::Analytic: return "analytic";
        case Command::Wp: return "wp";
        case Command::Mc: return "mc";
        case Command::Sweep: return "sweep";
        case Command::Tables: return "tables";
    }
    return "analytic";
}

inline Command command_from_string(const std::string& s) {
    if (s == "analytic") return Command::Analytic;
    if (s == "wp") return Command::Wp;
    if (s == "mc") return Command::Mc;
    if (s == "sweep") return Command::Sweep;
    if (s == "tables") return Command::Tables;
    throw InvalidInput("config: unknown command '" + s + "'");
}

inline std::string to_string(McKind k) {
    switch (k) {
        case McKind::Variance: return "variance";
        case McKind::Distillation: return "distillation";
        case McKind::WorkingPoint: return "working_point";
    }
    return "variance";
}

inline McKind mc_kind_from_string(const std::string& s) {
    if (s == "variance") return McKind::Variance;
    if (s == "distillation") return McKind::Distillation;
    if (s == "working_point") return McKind::WorkingPoint;
    throw InvalidInput("config: unknown mc kind '" + s + "'");
}

inline Json to_json(const RunConfig& config) {
    Json j;
    j["command"] = to_string(config.command);
    j["interferometer"] = spec_to_json(config.spec);
    j["noise"] = noise_to_json(config.noise);
    j["scan"] = Json{{"steps", config.scan_steps}, {"theta_jitter", config.theta_jitter}};
    j["probe_phase"] = config.probe_phase;
    Json mc;
    mc["kind"] = to_string(config.mc.kind);
    mc["shots"] = config.mc.shots;
    mc["trials"] = config.mc.trials;
    if (config.mc.seed) mc["seed"] = *config.mc.seed;
    mc["true_phase"] = config.mc.true_phase;
    mc["probe_phase"] = config.mc.probe_phase;
    mc["emit_record"] = config.mc.emit_record;
    mc["exact_means"] = config.mc.exact_means;
    j["mc"] = mc;
    Json sweep;
    sweep["kind"] = to_string(config.sweep.kind);
    sweep["eta"] = axis_to_json(config.sweep.eta);
    sweep["n0"] = axis_to_json(config.sweep.n0);
    sweep["noise_stats"] = to_string(config.sweep.noise_stats);
    sweep["boundary_stats"] = to_string(config.sweep.boundary_stats);
    sweep["boundary"] = config.sweep.boundary;
    sweep["steps"] = config.sweep.steps;
    j["sweep"] = sweep;
    j["output"] = Json{{"path", config.output.path},
                       {"format", config.output.format == OutputFormat::Csv ? "csv" : "json"}};
    j["workers"] = config.workers;
    return j;
}

inline RunConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidInput("config: document must be a JSON object");
    RunConfig config;
    config.command =
        command_from_string(detail::field_or<std::string>(j, "command", "analytic"));
    config.spec = spec_from_json(detail::require_field(j, "interferometer", "config"));
    if (j.contains("noise")) config.noise = noise_from_json(j["noise"]);
    if (j.contains("scan")) {
        const Json& scan = j["scan"];
        config.scan_steps = detail::field_or(scan, "steps", 8);
        const auto jitter = scan.find("theta_jitter");
        if (jitter != scan.end()) {
            if (jitter->is_string()) {  // named hardware presets
                const std::string name = jitter->get<std::string>();
                if (name == "piezo") {
                    config.theta_jitter = kPiezoJitter;
                } else if (name == "slm") {
                    config.theta_jitter = kSlmJitter;
                } else {
                    throw InvalidInput("config: unknown jitter preset '" + name + "'");
                }
            } else {
                config.theta_jitter = jitter->get<double>();
            }
        }
    }
    config.probe_phase = detail::field_or(j, "probe_phase", config.probe_phase);
    if (j.contains("mc")) {
        const Json& mc = j["mc"];
        config.mc.kind = mc_kind_from_string(detail::field_or<std::string>(mc, "kind", "variance"));
        config.mc.shots = detail::field_or(mc, "shots", config.mc.shots);
        config.mc.trials = detail::field_or(mc, "trials", config.mc.trials);
        if (mc.contains("seed")) config.mc.seed = mc["seed"].get<std::uint64_t>();
        config.mc.true_phase = detail::field_or(mc, "true_phase", config.mc.true_phase);
        config.mc.probe_phase = detail::field_or(mc, "probe_phase", config.mc.probe_phase);
        config.mc.emit_record = detail::field_or(mc, "emit_record", config.mc.emit_record);
        config.mc.exact_means = detail::field_or(mc, "exact_means", config.mc.exact_means);
    }
    if (j.contains("sweep")) {
        const Json& sweep = j["sweep"];
        config.sweep.kind =
            kind_from_string(detail::field_or<std::string>(sweep, "kind", "nli"));
        if (sweep.contains("eta")) config.sweep.eta = axis_from_json(sweep["eta"], "eta");
        if (sweep.contains("n0")) config.sweep.n0 = axis_from_json(sweep["n0"], "n0");
        config.sweep.noise_stats = statistics_from_string(
            detail::field_or<std::string>(sweep, "noise_stats", "thermal"));
        config.sweep.boundary_stats = statistics_from_string(
            detail::field_or<std::string>(sweep, "boundary_stats", "poissonian"));
        config.sweep.boundary = detail::field_or(sweep, "boundary", config.sweep.boundary);
        config.sweep.steps = detail::field_or(sweep, "steps", config.sweep.steps);
    }
    if (j.contains("output")) {
        const Json& out = j["output"];
        config.output.path = detail::field_or<std::string>(out, "path", "");
        const std::string fmt = detail::field_or<std::string>(out, "format", "csv");
        if (fmt == "csv") {
            config.output.format = OutputFormat::Csv;
        } else if (fmt == "json") {
            config.output.format = OutputFormat::Json;
        } else {
            throw InvalidInput("config: output format must be 'csv' or 'json'");
        }
    }
    config.workers = detail::field_or(j, "workers", 1);
    if (config.workers < 1) throw InvalidInput("config: workers must be >= 1");
    return config;
}

inline std::string canonical_dump(const RunConfig& config) {
    return to_json(config).dump();
}

/// Hash of the experiment definition only: output routing and worker count
/// change neither the data nor the hash, so reruns under different execution
/// settings produce identical files.
inline std::string config_hash(const RunConfig& config) {
    Json j = to_json(config);
    j.erase("output");
    j.erase("workers");
    return hex64(fnv1a64(j.dump()));
}

// ---------------------------------------------------------------------------
// CSV emission: every file starts with a config-hash comment line, then the
// header row. Golden-file diffs rely on this layout and on shortest
// round-trip number formatting.
// ---------------------------------------------------------------------------

class CsvWriter {
  public:
    CsvWriter(std::string hash, std::vector<std::string> header)
        : hash_(std::move(hash)), header_(std::move(header)) {}

    std::string header_block() const {
        std::string out = "# config_hash=" + hash_ + "\n";
        for (std::size_t i = 0; i < header_.size(); ++i) {
            if (i) out += ',';
            out += header_[i];
        }
        out += '\n';
        return out;
    }

    static std::string row(const std::vector<std::string>& cells) {
        std::string out;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += cells[i];
        }
        out += '\n';
        return out;
    }

  private:
    std::string hash_;
    std::vector<std::string> header_;
};

}  // namespace qimd
