#pragma once

#include <cmath>
#include <variant>

#include "qimd/errors.hpp"
#include "qimd/statistics.hpp"

namespace qimd {

// Mach-Zehnder interferometer: coherent input of mean photon number n0 split
// and recombined by beam splitters of transmittance t1, t2. Output statistics
// is Poissonian.
struct MziSpec {
    double n0 = 0.0;
    double t1 = 0.5;
    double t2 = 0.5;

    // BS imbalance factor gamma = T1 T2 + (1-T1)(1-T2).
    double gamma() const noexcept { return t1 * t2 + (1.0 - t1) * (1.0 - t2); }

    void validate() const {
        if (!(n0 >= 0.0) || !std::isfinite(n0)) {
            throw InvalidInput("MziSpec: n0 must be finite and >= 0");
        }
        if (!(t1 >= 0.0 && t1 <= 1.0 && t2 >= 0.0 && t2 <= 1.0)) {
            throw InvalidInput("MziSpec: transmittances must lie in [0, 1]");
        }
    }
};

// Non-linear (SU(1,1)) interferometer: two squeezers of gains n0 and n0p,
// each gain expressed as the mean photon number the squeezer would emit
// unseeded. Output statistics is thermal.
struct NliSpec {
    double n0 = 0.0;
    double n0p = 0.0;

    void validate() const {
        if (!(n0 >= 0.0 && n0p >= 0.0) || !std::isfinite(n0) || !std::isfinite(n0p)) {
            throw InvalidInput("NliSpec: gains must be finite and >= 0");
        }
    }
};

using InterferometerSpec = std::variant<MziSpec, NliSpec>;

inline void validate(const InterferometerSpec& spec) {
    std::visit([](const auto& s) { s.validate(); }, spec);
}

// Photon number of the probe arm, used as the shot-noise reference 1/n0.
inline double probe_photons(const InterferometerSpec& spec) {
    if (const auto* mzi = std::get_if<MziSpec>(&spec)) return mzi->n0;
    return std::get<NliSpec>(spec).n0;
}

// Noise admixture stage: the interferometer output passes a BS of
// transmittance eta whose other port carries a noise mode of mean photon
// number mean_noise. The detected noise fraction is n_n = (1-eta) mean_noise.
struct NoiseChannel {
    double eta = 1.0;
    double mean_noise = 0.0;
    PhotonStatistics stats = PhotonStatistics::Poissonian;

    double detected_noise() const noexcept { return (1.0 - eta) * mean_noise; }

    void validate() const {
        if (!(eta >= 0.0 && eta <= 1.0)) {
            throw InvalidInput("NoiseChannel: eta must lie in [0, 1]");
        }
        if (!(mean_noise >= 0.0) || !std::isfinite(mean_noise)) {
            throw InvalidInput("NoiseChannel: mean photon number must be finite and >= 0");
        }
    }
};

// Reduced description of the detected fringe,
//   N(phi) = n_n + amplitude * (1 - contrast * cos phi),
// with amplitude already including the noise-BS transmittance eta.
struct FringeModel {
    double amplitude = 0.0;   // A > 0
    double contrast = 0.0;    // C in [0, 1]
    double noise_mean = 0.0;  // detected noise n_n >= 0
    double eta = 1.0;
    double lambda_phi = 0.0;  // interferometer statistics
    double lambda_n = 0.0;    // noise statistics

    // Noise-to-amplitude ratio xi = n_n / A.
    double xi() const noexcept { return noise_mean / amplitude; }

    bool zero_contrast() const noexcept { return contrast == 0.0; }

    void validate() const {
        if (!(amplitude > 0.0) || !std::isfinite(amplitude)) {
            throw InvalidInput("FringeModel: amplitude must be finite and > 0");
        }
        if (!(contrast >= 0.0 && contrast <= 1.0)) {
            throw InvalidInput("FringeModel: contrast must lie in [0, 1]");
        }
        if (!(noise_mean >= 0.0) || !std::isfinite(noise_mean)) {
            throw InvalidInput("FringeModel: noise mean must be finite and >= 0");
        }
        if (!(eta >= 0.0 && eta <= 1.0)) {
            throw InvalidInput("FringeModel: eta must lie in [0, 1]");
        }
    }
};

// Signal-noise covariance of the detection stage. The two sources are
// incoherent and uncorrelated, so it is zero; it stays in the variance
// expression so a correlated-noise extension changes one constant.
inline constexpr double kSignalNoiseCovariance = 0.0;

/// Reduce a physical configuration plus noise channel to the fringe model.
/// Rejects configurations with zero signal amplitude.
inline FringeModel derive_fringe(const InterferometerSpec& spec, const NoiseChannel& noise) {
    validate(spec);
    noise.validate();

    FringeModel model;
    model.eta = noise.eta;
    model.noise_mean = noise.detected_noise();
    model.lambda_n = lambda_of(noise.stats);

    if (const auto* mzi = std::get_if<MziSpec>(&spec)) {
        const double gamma = mzi->gamma();
        model.amplitude = noise.eta * gamma * mzi->n0;
        model.contrast = gamma > 0.0
            ? 2.0 * std::sqrt(mzi->t1 * mzi->t2 * (1.0 - mzi->t1) * (1.0 - mzi->t2)) / gamma
            : 0.0;
        model.lambda_phi = 0.0;
    } else {
        const auto& nli = std::get<NliSpec>(spec);
        // Keep eta in numerator and amplitude; it cancels in the contrast.
        model.amplitude = noise.eta * (nli.n0 + nli.n0p + 2.0 * nli.n0 * nli.n0p);
        model.contrast = model.amplitude > 0.0
            ? 2.0 * noise.eta * std::sqrt(nli.n0 * nli.n0p * (nli.n0 + 1.0) * (nli.n0p + 1.0)) /
                  model.amplitude
            : 0.0;
        model.lambda_phi = 1.0;
    }

    if (!(model.amplitude > 0.0)) {
        throw InvalidInput("derive_fringe: degenerate configuration with zero amplitude");
    }
    // Guard roundoff overshoot of C = 1 setups.
    if (model.contrast > 1.0 && model.contrast < 1.0 + 1e-12) model.contrast = 1.0;
    model.validate();
    return model;
}

// Interferometer part of the detected signal, n_phi = A (1 - C cos phi),
// evaluated as A [(1-C) + 2C sin²(phi/2)] which stays cancellation-free at
// the fringe minimum.
inline double fringe_signal(const FringeModel& model, double phi) noexcept {
    const double s = std::sin(0.5 * phi);
    return model.amplitude * ((1.0 - model.contrast) + 2.0 * model.contrast * s * s);
}

/// Mean detected counts N(phi) = n_n + A (1 - C cos phi).
inline double fringe_mean(const FringeModel& model, double phi) noexcept {
    return model.noise_mean + fringe_signal(model, phi);
}

/// Variance of the detected counts, reduced form:
///   ΔN² = n_phi (1 + λ_phi n_phi) + n_n (1 + λ_n n_n) + 2 n_phi n_n.
inline double detected_variance(const FringeModel& model, double phi) noexcept {
    const double np = fringe_signal(model, phi);
    const double nn = model.noise_mean;
    return np * (1.0 + model.lambda_phi * np) + nn * (1.0 + model.lambda_n * nn) +
           2.0 * np * nn;
}

/// Variance of the detected counts assembled term by term in the pre-reduction
/// grouping: transmitted-signal variance, detected-noise variance, the photon
/// cross term, the two vacuum-admixture terms, and the (zero) covariance.
/// Agrees with detected_variance up to rounding; kept as an independent path.
inline double detected_variance_terms(const FringeModel& model, double phi) noexcept {
    const double np = fringe_signal(model, phi);
    const double nn = model.noise_mean;
    const double eta = model.eta;
    const double var_signal = eta * np + model.lambda_phi * np * np;       // eta^2 Var(n_I)
    const double var_noise = (1.0 - eta) * nn + model.lambda_n * nn * nn;  // (1-eta)^2 Var(n)
    return var_signal + var_noise + 2.0 * np * nn + (1.0 - eta) * np + eta * nn +
           4.0 * kSignalNoiseCovariance;
}

}  // namespace qimd
