#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qimd/errors.hpp"
#include "qimd/fringe.hpp"
#include "qimd/monte_carlo.hpp"
#include "qimd/numeric.hpp"
#include "qimd/sampling.hpp"
#include "qimd/serialize.hpp"
#include "qimd/uncertainty.hpp"
#include "qimd/working_point.hpp"

namespace qimd {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericError = 3;
inline constexpr int kExitInconclusive = 4;

struct AnalyticResult {
    FringeModel model;
    UncertaintyReport report;
    double shot_noise_ref = 0.0;  // 1 / n0 with n0 the probe photon number
};

/// Closed-form uncertainty budget plus the numerically located working point.
/// The numerical minimum must agree with the closed form to 1e-6 relative.
/// Every closed form scales exactly as 1/M, so M below the distillation
/// minimum of 3 is served by rescaling the M = 3 plan.
inline AnalyticResult run_analytic(const RunConfig& config) {
    if (config.scan_steps < 1) throw InvalidInput("analytic: steps must be >= 1");
    const ScanPlan plan(std::max(config.scan_steps, 3), config.theta_jitter);
    const double scale = static_cast<double>(plan.steps) / config.scan_steps;
    AnalyticResult out;
    out.model = derive_fringe(config.spec, config.noise);
    out.report.intrinsic = intrinsic_uncertainty(out.model);
    out.report.distillation = distillation_uncertainty(out.model, plan) * scale;
    out.report.scanning = scan_uncertainty(out.model, plan) * scale;
    const WpClosed wp = wp_uncertainty_closed(out.model, config.scan_steps);
    out.report.working_point = wp.variance;
    out.report.phi1 = wp.phi1;
    const WorkingPointResult numeric = minimize_phase_uncertainty(out.model, config.scan_steps);
    if (relative_diff(numeric.variance, wp.variance) > 1e-6) {
        throw NumericError("analytic: numerical working point disagrees with the closed form");
    }
    out.report.wp_phase = numeric.phase;
    out.report.probe_phase = config.probe_phase;
    out.report.single_point = single_point_uncertainty(out.model, config.probe_phase);
    const double n0 = probe_photons(config.spec);
    out.shot_noise_ref = n0 > 0.0 ? 1.0 / n0 : std::numeric_limits<double>::infinity();
    return out;
}

inline Json analytic_to_json(const AnalyticResult& r, const std::string& hash) {
    Json j;
    j["config_hash"] = hash;
    j["amplitude"] = r.model.amplitude;
    j["contrast"] = r.model.contrast;
    j["noise_mean"] = r.model.noise_mean;
    j["xi"] = r.model.xi();
    j["lambda_phi"] = r.model.lambda_phi;
    j["lambda_n"] = r.model.lambda_n;
    j["intrinsic"] = r.report.intrinsic;
    j["distillation"] = r.report.distillation;
    j["scanning"] = r.report.scanning;
    j["working_point"] = r.report.working_point;
    j["wp_phase"] = r.report.wp_phase;
    j["phi1"] = r.report.phi1;
    j["single_point"] = r.report.single_point;
    j["probe_phase"] = r.report.probe_phase;
    j["shot_noise_ref"] = r.shot_noise_ref;
    return j;
}

/// One-row CSV view of a flat JSON report (config_hash moves to the comment).
inline std::string single_row_csv(const Json& j, const std::string& hash) {
    std::vector<std::string> header, cells;
    for (const auto& [key, value] : j.items()) {
        if (key == "config_hash") continue;
        header.push_back(key);
        cells.push_back(value.is_number_float() ? format_double(value.get<double>())
                                                : value.dump());
    }
    const CsvWriter csv(hash, header);
    return csv.header_block() + CsvWriter::row(cells);
}

inline std::string analytic_to_csv(const AnalyticResult& r, const std::string& hash) {
    return single_row_csv(analytic_to_json(r, hash), hash);
}

struct WpRunResult {
    WorkingPointResult numeric;
    WpClosed closed;
    BoundaryLimits limits;
    int repetitions = 1;
};

inline WpRunResult run_wp(const RunConfig& config) {
    WpRunResult out;
    const FringeModel model = derive_fringe(config.spec, config.noise);
    out.repetitions = std::max(config.scan_steps, 1);
    out.numeric = minimize_phase_uncertainty(model, out.repetitions);
    out.closed = wp_uncertainty_closed(model, out.repetitions);
    out.limits = boundary_limits(model, out.repetitions);
    if (relative_diff(out.numeric.variance, out.closed.variance) > 1e-6) {
        throw NumericError("wp: numerical working point disagrees with the closed form");
    }
    return out;
}

inline Json wp_to_json(const WpRunResult& r, const std::string& hash) {
    Json j;
    j["config_hash"] = hash;
    j["wp_phase"] = r.numeric.phase;
    j["wp_variance"] = r.numeric.variance;
    j["at_boundary"] = r.numeric.at_boundary;
    j["iterations"] = r.numeric.iterations;
    j["closed_form"] = r.closed.variance;
    j["phi1"] = r.closed.phi1;
    j["repetitions"] = r.repetitions;
    j["limit_phi_to_0"] = std::isinf(r.limits.at_zero) ? Json("inf") : Json(r.limits.at_zero);
    j["limit_phi_to_pi"] = std::isinf(r.limits.at_pi) ? Json("inf") : Json(r.limits.at_pi);
    return j;
}

// ---------------------------------------------------------------------------
// Monte-Carlo runs
// ---------------------------------------------------------------------------

struct McRunResult {
    Json report;
    std::optional<std::string> record_csv;
    std::optional<std::string> record_sidecar;
    bool inconclusive = false;
};

inline std::string record_to_csv(const MeasurementRecord& record, const std::string& hash) {
    const CsvWriter csv(hash, {"setting_index", "shot_index", "count"});
    std::string out = csv.header_block();
    for (std::size_t j = 0; j < record.counts.size(); ++j) {
        for (std::size_t r = 0; r < record.counts[j].size(); ++r) {
            out += CsvWriter::row({std::to_string(j), std::to_string(r),
                                   std::to_string(record.counts[j][r])});
        }
    }
    return out;
}

inline std::string record_sidecar_json(const MeasurementRecord& record, const std::string& hash) {
    Json j;
    j["seed"] = record.seed;
    j["config_hash"] = hash;
    j["settings"] = record.settings;
    j["shots_per_setting"] = record.shots_per_setting;
    return j.dump(2) + "\n";
}

inline McRunResult run_mc(const RunConfig& config) {
    if (!config.mc.seed) throw InvalidInput("mc: a seed is required");
    const std::uint64_t seed = *config.mc.seed;
    const std::string hash = config_hash(config);
    const FringeModel model = derive_fringe(config.spec, config.noise);
    McRunResult out;
    out.report["config_hash"] = hash;
    out.report["kind"] = to_string(config.mc.kind);
    out.report["seed"] = seed;

    switch (config.mc.kind) {
        case McKind::Variance: {
            const ScanPlan plan(config.scan_steps, config.theta_jitter);
            const SimulationModel sim = simulation_model(model);
            std::vector<double> settings;
            for (double theta : plan.thetas()) settings.push_back(config.mc.true_phase + theta);
            BsSampler bs(sim.eta);
            MeasurementRecord record;
            record.seed = seed;
            record.settings = settings;
            record.shots_per_setting = config.mc.shots;
            record.counts.resize(settings.size());
            parallel_for(settings.size(), config.workers, [&](std::size_t j) {
                Rng rng(derive_seed(seed, kSettingStream, j));
                auto& row = record.counts[j];
                row.resize(static_cast<std::size_t>(config.mc.shots));
                for (int r = 0; r < config.mc.shots; ++r) {
                    row[static_cast<std::size_t>(r)] = simulate_one_count(sim, settings[j], rng, bs);
                }
            });
            bool all_pass = true;
            Json rows = Json::array();
            for (std::size_t j = 0; j < settings.size(); ++j) {
                const EmpiricalEstimate est = make_estimate(record.counts[j]);
                const double mean_ref = fringe_mean(model, settings[j]);
                const double var_ref = detected_variance(model, settings[j]);
                const double z_mean = (est.mean - mean_ref) / est.stderr_mean;
                const double z_var = (est.variance - var_ref) / est.stderr_variance;
                const bool pass = std::abs(z_mean) <= 3.0 && std::abs(z_var) <= 3.0;
                all_pass = all_pass && pass;
                Json row;
                row["setting"] = settings[j];
                row["empirical_mean"] = est.mean;
                row["analytic_mean"] = mean_ref;
                row["z_mean"] = z_mean;
                row["empirical_variance"] = est.variance;
                row["analytic_variance"] = var_ref;
                row["z_variance"] = z_var;
                row["pass_3sigma"] = pass;
                rows.push_back(row);
            }
            out.report["settings"] = rows;
            out.report["pass_3sigma"] = all_pass;
            out.report["status"] = "ok";
            if (config.mc.emit_record) {
                out.record_csv = record_to_csv(record, hash);
                out.record_sidecar = record_sidecar_json(record, hash);
            }
            break;
        }
        case McKind::Distillation: {
            const ScanPlan plan(config.scan_steps, config.theta_jitter);
            McDistillationConfig mc;
            mc.shots = config.mc.shots;
            mc.trials = config.mc.trials;
            mc.seed = seed;
            mc.true_phase = config.mc.true_phase;
            mc.workers = config.workers;
            mc.exact_means = config.mc.exact_means;
            const McEstimatorResult res = mc_distillation(model, plan, mc);
            const double z = (res.error.variance - res.predicted) / res.error.stderr_variance;
            out.report["trials"] = res.trials;
            out.report["shots_per_setting"] = mc.shots;
            out.report["true_phase"] = mc.true_phase;
            out.report["empirical_variance"] = res.error.variance;
            out.report["empirical_bias"] = res.error.mean;
            out.report["stderr_variance"] = res.error.stderr_variance;
            out.report["analytic_variance"] = res.analytic;
            out.report["predicted_variance"] = res.predicted;
            out.report["ratio"] = res.error.variance / res.predicted;
            out.report["z_variance"] = z;
            out.report["pass_3sigma"] = std::abs(z) <= 3.0;
            out.report["failures"] = res.failures;
            out.report["linearity_ok"] = res.linearity_ok;
            out.inconclusive = !res.conclusive();
            out.report["status"] = out.inconclusive ? "inconclusive" : "ok";
            break;
        }
        case McKind::WorkingPoint: {
            McWorkingPointConfig mc;
            mc.probe_phase = config.mc.probe_phase;
            if (!(mc.probe_phase > 0.0)) {
                // Non-positive probe requests the numerically located WP.
                mc.probe_phase = minimize_phase_uncertainty(model, 1).phase;
                if (mc.probe_phase == 0.0) {
                    throw InvalidInput("mc: working point lies on the boundary; choose a probe phase");
                }
            }
            mc.shots = config.mc.shots;
            mc.trials = config.mc.trials;
            mc.seed = seed;
            mc.workers = config.workers;
            const McEstimatorResult res = mc_working_point(model, mc);
            const double z = (res.error.variance - res.predicted) / res.error.stderr_variance;
            out.report["trials"] = res.trials;
            out.report["shots"] = mc.shots;
            out.report["probe_phase"] = mc.probe_phase;
            out.report["empirical_variance"] = res.error.variance;
            out.report["empirical_bias"] = res.error.mean;
            out.report["stderr_variance"] = res.error.stderr_variance;
            out.report["analytic_variance"] = res.analytic;
            out.report["predicted_variance"] = res.predicted;
            out.report["ratio"] = res.error.variance / res.predicted;
            out.report["z_variance"] = z;
            out.report["pass_3sigma"] = std::abs(z) <= 3.0;
            out.report["clamp_rate"] = res.clamp_rate;
            out.report["linearity_ok"] = res.linearity_ok;
            out.report["regime_ok"] = res.regime_ok;
            out.inconclusive = !res.conclusive();
            out.report["status"] = out.inconclusive ? "inconclusive" : "ok";
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweep and table reproduction
// ---------------------------------------------------------------------------

struct SweepRunResult {
    std::string main_csv;
    std::optional<std::string> boundary_csv;
};

inline SweepRunResult run_sweep(const RunConfig& config) {
    const std::string hash = config_hash(config);
    SweepGrid grid;
    grid.eta_axis = config.sweep.eta.values();
    grid.n0_axis = config.sweep.n0.values();
    grid.noise_stats = config.sweep.noise_stats;
    grid.validate();

    SweepRunResult out;
    const CsvWriter main_csv(hash, {"eta", "n0", "dphi_wp2", "dphi_n2", "ratio",
                                    "shot_noise_flag"});
    out.main_csv = main_csv.header_block();
    if (!grid.eta_axis.empty() && !grid.n0_axis.empty()) {
        const auto cells = ratio_map(grid, config.sweep.kind, config.sweep.steps);
        for (const auto& cell : cells) {
            out.main_csv += CsvWriter::row({format_double(cell.eta), format_double(cell.n0),
                                            format_double(cell.wp),
                                            format_double(cell.distillation),
                                            format_double(cell.ratio),
                                            cell.below_shot_noise ? "1" : "0"});
        }
    }

    if (config.sweep.boundary && config.sweep.kind == InterferometerKind::Nli) {
        const CsvWriter boundary_csv(hash, {"n0", "eta_star"});
        std::string text = boundary_csv.header_block();
        for (double n0 : grid.n0_axis) {
            const ShotNoiseBoundary b =
                shot_noise_boundary(n0, config.sweep.steps, config.sweep.boundary_stats);
            text += CsvWriter::row(
                {format_double(n0), b.eta ? format_double(*b.eta) : std::string()});
        }
        out.boundary_csv = text;
    }
    return out;
}

inline std::string run_tables(const RunConfig& config) {
    const std::string hash = config_hash(config);
    const int m_steps = std::max(config.scan_steps, 3);
    const ScanPlan plan(m_steps);
    const CsvWriter csv(hash, {"table", "kind", "quantity", "m", "n0", "n0p_or_t1", "eta",
                               "n_n", "lambda_n", "table_value", "general_value", "rel_diff"});
    std::string out = csv.header_block();

    const auto emit = [&](const char* table, const char* kind, const char* quantity, double n0,
                          double second, double eta, double nn, double ln, double table_value,
                          double general_value) {
        out += CsvWriter::row({table, kind, quantity, std::to_string(m_steps),
                               format_double(n0), format_double(second), format_double(eta),
                               format_double(nn), format_double(ln), format_double(table_value),
                               format_double(general_value),
                               format_double(relative_diff(table_value, general_value))});
    };

    const NoiseChannel no_noise{1.0, 0.0, PhotonStatistics::Poissonian};

    // Vanishing noise, arbitrary contrast.
    for (double n0 : {1.0, 10.0, 1000.0}) {
        for (double t1 : {0.5, 0.3, 0.7}) {
            const MziSpec spec{n0, t1, 0.6};
            const TableValues tv = table_formula(spec, TableRegime::NoNoise, plan, no_noise);
            const FringeModel model = derive_fringe(spec, no_noise);
            emit("1", "mzi", "dphi_n2", n0, t1, 1.0, 0.0, 0.0, tv.distillation,
                 distillation_uncertainty(model, plan));
            emit("1", "mzi", "dphi_wp2", n0, t1, 1.0, 0.0, 0.0, tv.working_point,
                 wp_uncertainty_closed(model, plan).variance);
        }
        for (double n0p : {0.5, 1.0, 2.0}) {
            const NliSpec spec{n0, n0p};
            const TableValues tv = table_formula(spec, TableRegime::NoNoise, plan, no_noise);
            const FringeModel model = derive_fringe(spec, no_noise);
            emit("1", "nli", "dphi_n2", n0, n0p, 1.0, 0.0, 0.0, tv.distillation,
                 distillation_uncertainty(model, plan));
            emit("1", "nli", "dphi_wp2", n0, n0p, 1.0, 0.0, 0.0, tv.working_point,
                 wp_uncertainty_closed(model, plan).variance);
        }
    }

    // Perfect contrast with noise.
    for (double n0 : {1.0, 10.0, 100.0}) {
        for (double eta : {0.5, 0.9}) {
            for (double nn : {0.5, 2.0}) {
                for (PhotonStatistics stats :
                     {PhotonStatistics::Poissonian, PhotonStatistics::Thermal}) {
                    const NoiseChannel noise{eta, nn / (1.0 - eta), stats};
                    const double ln = lambda_of(stats);
                    {
                        const MziSpec spec{n0, 0.5, 0.5};
                        const TableValues tv =
                            table_formula(spec, TableRegime::PerfectContrast, plan, noise);
                        const FringeModel model = derive_fringe(spec, noise);
                        emit("2", "mzi", "dphi_02", n0, 0.5, eta, nn, ln, tv.intrinsic,
                             intrinsic_uncertainty(model));
                        emit("2", "mzi", "dphi_n2", n0, 0.5, eta, nn, ln, tv.distillation,
                             distillation_uncertainty(model, plan));
                        emit("2", "mzi", "dphi_wp2", n0, 0.5, eta, nn, ln, tv.working_point,
                             wp_uncertainty_closed(model, plan).variance);
                    }
                    {
                        const NliSpec spec{n0, n0};
                        const TableValues tv =
                            table_formula(spec, TableRegime::PerfectContrast, plan, noise);
                        const FringeModel model = derive_fringe(spec, noise);
                        emit("2", "nli", "dphi_02", n0, n0, eta, nn, ln, tv.intrinsic,
                             intrinsic_uncertainty(model));
                        emit("2", "nli", "dphi_n2", n0, n0, eta, nn, ln, tv.distillation,
                             distillation_uncertainty(model, plan));
                        emit("2", "nli", "dphi_wp2", n0, n0, eta, nn, ln, tv.working_point,
                             wp_uncertainty_closed(model, plan).variance);
                    }
                }
            }
        }
    }

    // Spontaneous regime, n_n = (1 - eta) n0; asymptotic in n0.
    for (double n0 : {1e-2, 1e-3, 1e-4}) {
        for (double eta : {0.3, 0.5, 0.7, 0.9}) {
            const NoiseChannel noise{eta, n0, PhotonStatistics::Thermal};
            const double nn = noise.detected_noise();
            {
                const MziSpec spec{n0, 0.5, 0.5};
                const TableValues tv = table_formula(spec, TableRegime::Spontaneous, plan, noise);
                const FringeModel model = derive_fringe(spec, noise);
                emit("3", "mzi", "dphi_n2", n0, 0.5, eta, nn, 1.0, tv.distillation,
                     distillation_uncertainty(model, plan));
                emit("3", "mzi", "dphi_wp2", n0, 0.5, eta, nn, 1.0, tv.working_point,
                     wp_uncertainty_closed(model, plan).variance);
            }
            {
                const NliSpec spec{n0, n0};
                const TableValues tv = table_formula(spec, TableRegime::Spontaneous, plan, noise);
                const FringeModel model = derive_fringe(spec, noise);
                emit("3", "nli", "dphi_n2", n0, n0, eta, nn, 1.0, tv.distillation,
                     distillation_uncertainty(model, plan));
                emit("3", "nli", "dphi_wp2", n0, n0, eta, nn, 1.0, tv.working_point,
                     wp_uncertainty_closed(model, plan).variance);
            }
        }
    }
    return out;
}

}  // namespace qimd
