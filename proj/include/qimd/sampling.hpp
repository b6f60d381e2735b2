#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "qimd/errors.hpp"
#include "qimd/fock.hpp"
#include "qimd/fringe.hpp"
#include "qimd/numeric.hpp"
#include "qimd/rng.hpp"
#include "qimd/statistics.hpp"

namespace qimd {

/// Poisson sample by sequential inverse-CDF search. Means above 256 are split
/// into independent chunks (Poisson additivity keeps this exact).
inline std::int64_t sample_poisson(double mean, Rng& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw InvalidInput("sample_poisson: mean must be finite and >= 0");
    }
    std::int64_t total = 0;
    while (mean > 256.0) {
        constexpr double chunk = 256.0;
        double p = std::exp(-chunk);
        double cum = p;
        const double u = rng.uniform();
        std::int64_t k = 0;
        const std::int64_t cap = 256 + 16 * 60;
        while (u > cum && k < cap) {
            ++k;
            p *= chunk / static_cast<double>(k);
            cum += p;
        }
        total += k;
        mean -= chunk;
    }
    double p = std::exp(-mean);
    double cum = p;
    const double u = rng.uniform();
    std::int64_t k = 0;
    const std::int64_t cap = static_cast<std::int64_t>(mean + 60.0 * std::sqrt(mean + 1.0)) + 30;
    while (u > cum && k < cap) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
    }
    return total + k;
}

/// Thermal (single-mode squeezed-vacuum) sample via the closed-form inverse
/// CDF of the geometric law P(n) = mean^n / (1 + mean)^(n+1).
inline std::int64_t sample_thermal(double mean, Rng& rng) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) {
        throw InvalidInput("sample_thermal: mean must be finite and >= 0");
    }
    if (mean == 0.0) return 0;
    const double log_p = std::log(mean) - std::log1p(mean);
    const double u = rng.uniform();
    const double x = std::log1p(-u) / log_p;
    if (!(x < 9.0e15)) return 9'000'000'000'000'000;  // u astronomically close to 1
    return static_cast<std::int64_t>(x);
}

inline std::int64_t sample_photon_number(PhotonStatistics stats, double mean, Rng& rng) {
    return stats == PhotonStatistics::Thermal ? sample_thermal(mean, rng)
                                              : sample_poisson(mean, rng);
}

/// Samples the transmitted photon number of a BS fed with |m, n>, using
/// cached inverse CDFs of the exact output distributions. eta is fixed per
/// sampler; the cache is shared and thread-safe, and cached values never
/// depend on lookup order.
class BsSampler {
  public:
    explicit BsSampler(double eta, std::size_t byte_budget = std::size_t{1} << 30)
        : eta_(eta), byte_budget_(byte_budget) {
        if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidInput("BsSampler: eta must lie in [0, 1]");
    }

    double eta() const noexcept { return eta_; }

    std::int64_t sample(std::int64_t m, std::int64_t n, Rng& rng) {
        if (m < 0 || n < 0) throw InvalidInput("BsSampler: negative photon number");
        if (m + n == 0) return 0;
        if (eta_ == 1.0) return m;
        if (eta_ == 0.0) return n;
        if (m + n > kFockHardCap) {
            throw InvalidInput("BsSampler: m + n exceeds the Fock hard cap");
        }
        const std::shared_ptr<const std::vector<double>> cdf =
            cdf_for(static_cast<int>(m), static_cast<int>(n));
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf->begin(), cdf->end(), u);
        return std::min<std::int64_t>(it - cdf->begin(), m + n);
    }

  private:
    std::shared_ptr<const std::vector<double>> cdf_for(int m, int n) {
        const std::uint64_t key =
            (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)) << 32) |
            static_cast<std::uint32_t>(n);
        {
            std::shared_lock lock(mutex_);
            const auto it = cache_.find(key);
            if (it != cache_.end()) return it->second;
        }
        auto cdf = std::make_shared<const std::vector<double>>(build_cdf(m, n));
        std::unique_lock lock(mutex_);
        if (bytes_ > byte_budget_) {  // crude but safe eviction: entries are shared
            cache_.clear();
            bytes_ = 0;
        }
        auto [it, inserted] = cache_.try_emplace(key, std::move(cdf));
        if (inserted) bytes_ += it->second->size() * sizeof(double) + 64;
        return it->second;
    }

    std::vector<double> build_cdf(int m, int n) const {
        const FockDistribution dist = bs_output_distribution(m, n, eta_);
        CompensatedSum<double> run;
        std::vector<double> cdf(dist.probs.size());
        for (std::size_t k = 0; k < dist.probs.size(); ++k) {
            run.add(dist.probs[k]);
            cdf[k] = run.value();
        }
        const double total = cdf.back();
        if (!(std::abs(total - 1.0) <= 1e-6)) {
            throw NumericError("BsSampler: output distribution failed normalization");
        }
        for (double& c : cdf) c /= total;
        cdf.back() = 1.0;
        return cdf;
    }

    double eta_;
    std::size_t byte_budget_;
    std::size_t bytes_ = 0;
    std::unordered_map<std::uint64_t, std::shared_ptr<const std::vector<double>>> cache_;
    mutable std::shared_mutex mutex_;
};

// Number-diagonal input description of one noisy-detection experiment:
// interferometer mode with phase-dependent mean, incoherently superimposed
// with an independent noise mode on a BS of transmittance eta.
struct SimulationModel {
    std::function<double(double)> mean_interferometer;
    PhotonStatistics stats_interferometer = PhotonStatistics::Poissonian;
    double mean_noise = 0.0;
    PhotonStatistics stats_noise = PhotonStatistics::Poissonian;
    double eta = 1.0;
};

/// Simulation inputs matching a fringe model: mean_I(phi) = n_phi / eta.
inline SimulationModel simulation_model(const FringeModel& model,
                                        PhotonStatistics interferometer_stats,
                                        PhotonStatistics noise_stats) {
    model.validate();
    if (!(model.eta > 0.0)) {
        throw InvalidInput("simulation_model: eta must be > 0 to carry signal");
    }
    SimulationModel sim;
    sim.mean_interferometer = [model](double phi) { return fringe_signal(model, phi) / model.eta; };
    sim.stats_interferometer = interferometer_stats;
    sim.mean_noise = model.eta < 1.0 ? model.noise_mean / (1.0 - model.eta) : 0.0;
    sim.stats_noise = noise_stats;
    sim.eta = model.eta;
    return sim;
}

inline SimulationModel simulation_model(const FringeModel& model) {
    return simulation_model(model,
                            model.lambda_phi > 0.5 ? PhotonStatistics::Thermal
                                                   : PhotonStatistics::Poissonian,
                            model.lambda_n > 0.5 ? PhotonStatistics::Thermal
                                                 : PhotonStatistics::Poissonian);
}

// Seeded Monte-Carlo shot data for a set of phase settings.
struct MeasurementRecord {
    std::uint64_t seed = 0;
    std::vector<double> settings;
    int shots_per_setting = 0;
    std::vector<std::vector<std::int64_t>> counts;  // [setting][shot]
};

/// One detected count: draw the two input photon numbers, then the
/// transmitted number from the exact BS output distribution.
inline std::int64_t simulate_one_count(const SimulationModel& model, double phi, Rng& rng,
                                       BsSampler& bs) {
    const double mean_i = model.mean_interferometer(phi);
    if (model.eta == 1.0 && model.mean_noise == 0.0) {
        // Identity channel: counts are exact draws of the interferometer mode.
        return sample_photon_number(model.stats_interferometer, mean_i, rng);
    }
    const std::int64_t m = sample_photon_number(model.stats_interferometer, mean_i, rng);
    const std::int64_t n = sample_photon_number(model.stats_noise, model.mean_noise, rng);
    return bs.sample(m, n, rng);
}

/// R shots at each phase setting; setting j draws from its own substream of
/// the master seed, so results do not depend on evaluation order.
inline MeasurementRecord simulate_detected_counts(const SimulationModel& model,
                                                  const std::vector<double>& settings, int shots,
                                                  std::uint64_t seed, BsSampler& bs) {
    if (shots < 1) throw InvalidInput("simulate_detected_counts: shots must be >= 1");
    MeasurementRecord record;
    record.seed = seed;
    record.settings = settings;
    record.shots_per_setting = shots;
    record.counts.resize(settings.size());
    for (std::size_t j = 0; j < settings.size(); ++j) {
        Rng rng(derive_seed(seed, kSettingStream, j));
        auto& row = record.counts[j];
        row.resize(static_cast<std::size_t>(shots));
        for (int r = 0; r < shots; ++r) {
            row[static_cast<std::size_t>(r)] = simulate_one_count(model, settings[j], rng, bs);
        }
    }
    return record;
}

inline MeasurementRecord simulate_detected_counts(const SimulationModel& model,
                                                  const std::vector<double>& settings, int shots,
                                                  std::uint64_t seed) {
    BsSampler bs(model.eta);
    return simulate_detected_counts(model, settings, shots, seed, bs);
}

// Sample mean/variance with standard errors; the variance stderr comes from
// the fourth central moment.
struct EmpiricalEstimate {
    double mean = 0.0;
    double variance = 0.0;
    double stderr_mean = 0.0;
    double stderr_variance = 0.0;
    std::size_t samples = 0;
};

template <typename Range>
inline EmpiricalEstimate make_estimate(const Range& values) {
    EmpiricalEstimate est;
    est.samples = static_cast<std::size_t>(values.size());
    if (est.samples == 0) return est;
    CompensatedSum<double> sum;
    for (const auto& v : values) sum.add(static_cast<double>(v));
    const double n = static_cast<double>(est.samples);
    est.mean = sum.value() / n;
    if (est.samples < 2) return est;
    CompensatedSum<double> m2, m4;
    for (const auto& v : values) {
        const double d = static_cast<double>(v) - est.mean;
        const double d2 = d * d;
        m2.add(d2);
        m4.add(d2 * d2);
    }
    est.variance = m2.value() / (n - 1.0);
    const double central4 = m4.value() / n;
    const double biased_var = m2.value() / n;
    const double var_of_var = std::max(central4 - biased_var * biased_var, 0.0) / n;
    est.stderr_mean = std::sqrt(est.variance / n);
    est.stderr_variance = std::sqrt(var_of_var);
    return est;
}

}  // namespace qimd
