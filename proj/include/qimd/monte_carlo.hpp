#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <vector>

#include "qimd/errors.hpp"
#include "qimd/fringe.hpp"
#include "qimd/numeric.hpp"
#include "qimd/rng.hpp"
#include "qimd/sampling.hpp"
#include "qimd/scan.hpp"
#include "qimd/uncertainty.hpp"

namespace qimd {

// Estimates must sit in the linearized error-propagation regime for the
// comparison against the closed forms to be meaningful.
inline constexpr double kLinearityGate = 0.1;  // rad

/// Index-parallel loop; results must be written to per-index slots so the
/// outcome is identical for any worker count.
template <typename F>
inline void parallel_for(std::size_t count, int workers, F&& body) {
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const int spawn = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int w = 0; w < spawn; ++w) {
        pool.emplace_back([&] {
            try {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                    body(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(count);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct McEstimatorResult {
    EmpiricalEstimate error;   // statistics of wrapped (phi_hat - phi_true)
    double analytic = 0.0;     // closed-form variance before shot averaging
    double predicted = 0.0;    // analytic / shots
    std::size_t trials = 0;
    std::size_t failures = 0;  // estimator failures (constant counts)
    double clamp_rate = 0.0;   // fraction of clamped arccos arguments (WP only)
    bool linearity_ok = true;
    bool regime_ok = true;

    bool conclusive() const noexcept { return linearity_ok && regime_ok; }
};

struct McDistillationConfig {
    int shots = 100;          // R shots averaged per setting
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    double true_phase = 0.7;  // hidden phase recovered by the estimator
    int workers = 1;
    bool exact_means = false; // feed noiseless model means (R -> infinity check)
};

/// Full distillation experiment: per trial, average R simulated shots at each
/// of the M settings, estimate the phase, and accumulate the wrapped error.
/// The empirical error variance is compared against Δφ_N² / R by the caller.
inline McEstimatorResult mc_distillation(const FringeModel& model, const ScanPlan& plan,
                                         const McDistillationConfig& config) {
    detail::require_contrast(model);
    plan.validate();
    if (config.shots < 1) throw InvalidInput("mc_distillation: shots must be >= 1");
    if (config.trials < 2) throw InvalidInput("mc_distillation: need at least 2 trials");

    McEstimatorResult result;
    result.trials = config.trials;
    result.analytic = distillation_uncertainty(model, plan);
    result.predicted = result.analytic / config.shots;
    result.linearity_ok = std::sqrt(result.predicted) <= kLinearityGate;

    const SimulationModel sim = simulation_model(model);
    BsSampler bs(sim.eta);
    const std::vector<double> thetas = plan.thetas();
    const std::size_t m = thetas.size();

    std::vector<double> errors(config.trials, std::numeric_limits<double>::quiet_NaN());
    std::atomic<std::size_t> failures{0};

    parallel_for(config.trials, config.workers, [&](std::size_t t) {
        Rng rng(derive_seed(config.seed, kTrialStream, t));
        std::vector<double> averaged(m);
        for (std::size_t j = 0; j < m; ++j) {
            const double phi_j = config.true_phase + thetas[j];
            if (config.exact_means) {
                averaged[j] = fringe_mean(model, phi_j);
                continue;
            }
            CompensatedSum<double> sum;
            for (int r = 0; r < config.shots; ++r) {
                sum.add(static_cast<double>(simulate_one_count(sim, phi_j, rng, bs)));
            }
            averaged[j] = sum.value() / config.shots;
        }
        try {
            const double estimate = distill_phase(averaged, plan);
            errors[t] = wrap_pi(estimate - config.true_phase);
        } catch (const NumericError&) {
            failures.fetch_add(1);
        }
    });

    result.failures = failures.load();
    if (result.failures > 0 &&
        static_cast<double>(result.failures) > 1e-3 * static_cast<double>(config.trials)) {
        throw NumericError("mc_distillation: estimator failure rate above 0.1%");
    }

    std::vector<double> valid;
    valid.reserve(config.trials);
    for (double e : errors) {
        if (!std::isnan(e)) valid.push_back(e);
    }
    result.error = make_estimate(valid);
    return result;
}

struct McWorkingPointConfig {
    double probe_phase = 1.5707963267948966;
    int shots = 100;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Single-setting experiment at a probe phase: per trial, invert the averaged
/// count through the known fringe, phi_hat = arccos[(n_n + A - N̄)/(A C)],
/// with the branch fixed by the probe. Compared against Δφ²(phi) / R.
inline McEstimatorResult mc_working_point(const FringeModel& model,
                                          const McWorkingPointConfig& config) {
    detail::require_contrast(model);
    if (config.shots < 1) throw InvalidInput("mc_working_point: shots must be >= 1");
    if (config.trials < 2) throw InvalidInput("mc_working_point: need at least 2 trials");
    const double phi = config.probe_phase;
    if (std::abs(std::sin(phi)) <= 1e-6) {
        throw InvalidInput("mc_working_point: probe phase too close to a stationary point");
    }

    McEstimatorResult result;
    result.trials = config.trials;
    result.analytic = single_point_uncertainty(model, phi);
    result.predicted = result.analytic / config.shots;
    result.linearity_ok = std::sqrt(result.predicted) <= kLinearityGate;

    const SimulationModel sim = simulation_model(model);
    BsSampler bs(sim.eta);
    const double branch = std::sin(phi) >= 0.0 ? 1.0 : -1.0;

    std::vector<double> errors(config.trials);
    std::atomic<std::size_t> clamped{0};

    parallel_for(config.trials, config.workers, [&](std::size_t t) {
        Rng rng(derive_seed(config.seed, kTrialStream, t));
        CompensatedSum<double> sum;
        for (int r = 0; r < config.shots; ++r) {
            sum.add(static_cast<double>(simulate_one_count(sim, phi, rng, bs)));
        }
        const double averaged = sum.value() / config.shots;
        double arg = (model.noise_mean + model.amplitude - averaged) /
                     (model.amplitude * model.contrast);
        if (arg < -1.0 || arg > 1.0) {
            clamped.fetch_add(1);
            arg = std::clamp(arg, -1.0, 1.0);
        }
        errors[t] = branch * std::acos(arg) - phi;
    });

    result.clamp_rate =
        static_cast<double>(clamped.load()) / static_cast<double>(config.trials);
    result.regime_ok = result.clamp_rate <= 0.01;
    result.error = make_estimate(errors);
    return result;
}

}  // namespace qimd
