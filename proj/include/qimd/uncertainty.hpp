#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <variant>

#include "qimd/errors.hpp"
#include "qimd/fringe.hpp"
#include "qimd/numeric.hpp"
#include "qimd/scan.hpp"

namespace qimd {

namespace detail {

inline void require_amplitude(const FringeModel& model) {
    model.validate();
}

inline void require_contrast(const FringeModel& model) {
    model.validate();
    if (!(model.contrast > 0.0)) {
        throw InvalidInput("fringe contrast is zero; phase information is unavailable");
    }
}

}  // namespace detail

inline constexpr double kStationaryGuard = 1e-12;

/// Phase estimate from M >= 3 detected values at equally spaced tunable
/// phases: phi_hat = atan2(S, -D) with S = sum N_j sin theta_j and
/// D = sum N_j cos theta_j, mapped to (-pi, pi]. The two-argument arctangent
/// keeps the quadrant that the scalar arctan form loses.
inline double distill_phase(std::span<const double> counts, const ScanPlan& plan) {
    plan.validate();
    if (counts.size() != static_cast<std::size_t>(plan.steps)) {
        throw InvalidInput("distill_phase: counts length must equal the number of steps");
    }
    CompensatedSum<double> s, d;
    double scale = 0.0;
    for (int j = 1; j <= plan.steps; ++j) {
        const double n = counts[static_cast<std::size_t>(j - 1)];
        if (!std::isfinite(n)) throw InvalidInput("distill_phase: non-finite count");
        const double theta = plan.theta(j);
        s.add(n * std::sin(theta));
        d.add(n * std::cos(theta));
        scale += std::abs(n);
    }
    const double sv = s.value();
    const double dv = d.value();
    const double guard = 1e-12 * std::max(1.0, scale);
    if (std::abs(sv) <= guard && std::abs(dv) <= guard) {
        throw NumericError("distill_phase: no fringe information (constant signal)");
    }
    double phi = std::atan2(sv, -dv);
    if (phi <= -std::numbers::pi) phi = std::numbers::pi;
    return phi;
}

/// Intrinsic phase uncertainty
///   Δφ0² = ½ [ (1+ξ)/A + 2ξ + ξ² λ_n ],  ξ = n_n / A.
inline double intrinsic_uncertainty(const FringeModel& model) {
    detail::require_amplitude(model);
    const double xi = model.xi();
    return 0.5 * ((1.0 + xi) / model.amplitude + 2.0 * xi + xi * xi * model.lambda_n);
}

/// Distillation phase uncertainty, closed form:
///   Δφ_N² = 4 Δφ0² / (M C²) + (1 + C²/4) 2 λ_phi / (M C²).
/// Exact for M >= 5; for M in {3, 4} an unsummed harmonic survives and the
/// explicit sum is authoritative (see distillation_uncertainty_sum).
inline double distillation_uncertainty(const FringeModel& model, const ScanPlan& plan) {
    detail::require_contrast(model);
    plan.validate();
    const double c2 = model.contrast * model.contrast;
    const double mc2 = plan.steps * c2;
    return 4.0 * intrinsic_uncertainty(model) / mc2 +
           (1.0 + c2 / 4.0) * 2.0 * model.lambda_phi / mc2;
}

// Explicit Gaussian error-propagation sum for the distillation estimator at a
// given true phase, evaluated along two groupings that must agree:
//   error_sum:    (4 / (M A C)²) Σ_j sin²(phi_j) ΔN²(phi_j)
//   harmonic_sum: (4 / M²) Σ_j sin⁴(phi_j) Δφ_j²
// closed_form carries the M >= 5 closed expression for residual diagnostics.
struct DistillationSum {
    double error_sum = 0.0;
    double harmonic_sum = 0.0;
    double closed_form = 0.0;

    double value() const noexcept { return error_sum; }
    double closed_residual() const noexcept { return error_sum - closed_form; }
};

inline DistillationSum distillation_uncertainty_sum(const FringeModel& model,
                                                    const ScanPlan& plan,
                                                    double true_phase) {
    detail::require_contrast(model);
    plan.validate();
    const double ac = model.amplitude * model.contrast;
    const double m = static_cast<double>(plan.steps);
    CompensatedSum<double> eq6, eq9;
    for (int j = 1; j <= plan.steps; ++j) {
        const double phi_j = true_phase + plan.theta(j);
        const double s = std::sin(phi_j);
        const double s2 = s * s;
        const double var = detected_variance(model, phi_j);
        eq6.add(s2 * var);
        if (s2 > kStationaryGuard) {
            eq9.add(s2 * s2 * (var / (ac * ac * s2)));
        } else {
            // Stationary setting: sin⁴ Δφ_j² regrouped as sin² ΔN² / (A C)²
            // so the summand stays finite instead of 0 * inf.
            eq9.add(s2 * (var / (ac * ac)));
        }
    }
    DistillationSum out;
    out.error_sum = 4.0 / (m * m * ac * ac) * eq6.value();
    out.harmonic_sum = 4.0 / (m * m) * eq9.value();
    out.closed_form = distillation_uncertainty(model, plan);
    if (relative_diff(out.error_sum, out.harmonic_sum) > 1e-12) {
        throw NumericError("distillation_uncertainty_sum: propagation groupings disagree");
    }
    return out;
}

/// Scanning contribution from tunable-phase jitter:
///   Δφ_θ² = (2 / (M C²)) (1 + 3C²/4 + 2ξ + ξ²) Δθ².
inline double scan_uncertainty(const FringeModel& model, const ScanPlan& plan) {
    detail::require_contrast(model);
    plan.validate();
    const double xi = model.xi();
    const double c2 = model.contrast * model.contrast;
    const double dtheta2 = plan.theta_jitter * plan.theta_jitter;
    return 2.0 / (plan.steps * c2) * (1.0 + 0.75 * c2 + 2.0 * xi + xi * xi) * dtheta2;
}

/// Single-setting, single-shot phase variance
///   Δφ² = ΔN²(φ) / (A C sin φ)².
/// Stationary fringe points (sin φ = 0) are rejected; limits belong to the
/// working-point boundary analysis.
inline double single_point_uncertainty(const FringeModel& model, double phi) {
    detail::require_contrast(model);
    const double s = std::sin(phi);
    if (std::abs(s) <= kStationaryGuard) {
        throw InvalidInput("single_point_uncertainty: stationary fringe point");
    }
    const double slope = model.amplitude * model.contrast * s;
    return detected_variance(model, phi) / (slope * slope);
}

// Minimal single-setting uncertainty (per M repeated measurements) and the
// auxiliary phi1 appearing in its closed form.
struct WpClosed {
    double variance = 0.0;
    double phi1 = 0.0;
};

/// Working-point phase uncertainty, closed form:
///   Δφ_WP² = Δφ0²/(M C²) + (1-C²) λ_phi/(2 M C²) + sqrt(φ1)/(2 M C²).
/// M counts repeated measurements at the single optimal setting, so any
/// M >= 1 is meaningful here. Tiny negative φ1 from cancellation (>-1e-12)
/// clamps to zero; anything more negative signals inconsistent inputs.
inline WpClosed wp_uncertainty_closed(const FringeModel& model, int repetitions) {
    detail::require_contrast(model);
    if (repetitions < 1) throw InvalidInput("wp_uncertainty_closed: repetitions must be >= 1");
    const double a = model.amplitude;
    const double xi = model.xi();
    const double c2 = model.contrast * model.contrast;
    const double lphi = model.lambda_phi;
    const double dphi0 = intrinsic_uncertainty(model);

    const double noise_term = xi * (1.0 / a + xi * model.lambda_n);
    double phi1 = noise_term * (4.0 * dphi0 + 4.0 * lphi - noise_term);
    const double base = 1.0 / a + 2.0 * xi + 2.0 * lphi;
    phi1 += (1.0 - c2) * (base * base - lphi * (4.0 * dphi0 + c2 + 3.0));

    if (phi1 < 0.0) {
        if (phi1 < -1e-12) {
            throw NumericError("wp_uncertainty_closed: phi1 is negative beyond roundoff");
        }
        phi1 = 0.0;
    }

    WpClosed out;
    out.phi1 = phi1;
    const double mc2 = repetitions * c2;
    out.variance = dphi0 / mc2 + (1.0 - c2) * lphi / (2.0 * mc2) + std::sqrt(phi1) / (2.0 * mc2);
    return out;
}

inline WpClosed wp_uncertainty_closed(const FringeModel& model, const ScanPlan& plan) {
    plan.validate();
    return wp_uncertainty_closed(model, plan.steps);
}

/// Working-point uncertainty of a noiseless NLI with unbalanced gains,
///   Δφ_WP² = 1 / (4 M n_min (n_min + 1)),
/// limited by the lower of the two squeezer gains.
inline double balanced_wp(double n_min, int repetitions) {
    if (repetitions < 1) throw InvalidInput("balanced_wp: repetitions must be >= 1");
    if (!(n_min > 0.0) || !std::isfinite(n_min)) {
        throw InvalidInput("balanced_wp: n_min must be finite and > 0");
    }
    return 1.0 / (4.0 * repetitions * n_min * (n_min + 1.0));
}

inline double balanced_wp(double n_min, const ScanPlan& plan) {
    plan.validate();
    return balanced_wp(n_min, plan.steps);
}

// ---------------------------------------------------------------------------
// Literal special-case expressions from the comparison tables, for
// cross-checking against the general formulas.
// ---------------------------------------------------------------------------

enum class TableRegime { NoNoise, PerfectContrast, Spontaneous };

struct TableValues {
    double distillation = 0.0;          // Δφ_N²
    double working_point = 0.0;         // Δφ_WP²
    double intrinsic = 0.0;             // Δφ0² (perfect-contrast table only)
    bool has_intrinsic = false;
    bool regime_warning = false;        // spontaneous table used outside n0 <= 0.01
};

inline TableValues table_formula(const InterferometerSpec& spec, TableRegime regime,
                                 const ScanPlan& plan, const NoiseChannel& noise) {
    validate(spec);
    plan.validate();
    noise.validate();
    const double m = static_cast<double>(plan.steps);
    const double nn = noise.detected_noise();
    const double ln = lambda_of(noise.stats);
    TableValues out;

    switch (regime) {
        case TableRegime::NoNoise: {
            if (nn != 0.0 || noise.eta != 1.0) {
                throw InvalidInput("table_formula: no-noise regime requires eta = 1 and zero noise");
            }
            if (const auto* mzi = std::get_if<MziSpec>(&spec)) {
                const double gamma = mzi->gamma();
                const double c = gamma > 0.0
                    ? 2.0 * std::sqrt(mzi->t1 * mzi->t2 * (1.0 - mzi->t1) * (1.0 - mzi->t2)) / gamma
                    : 0.0;
                if (!(c > 0.0) || !(gamma * mzi->n0 > 0.0)) {
                    throw InvalidInput("table_formula: degenerate MZI configuration");
                }
                const double c2 = c * c;
                out.distillation = 2.0 / (m * c2 * gamma * mzi->n0);
                out.working_point = 1.0 / (2.0 * m * gamma * mzi->n0 * (1.0 - std::sqrt(1.0 - c2)));
            } else {
                const auto& nli = std::get<NliSpec>(spec);
                const double a0 = nli.n0 + nli.n0p + 2.0 * nli.n0 * nli.n0p;
                if (!(a0 > 0.0) || !(nli.n0 > 0.0 && nli.n0p > 0.0)) {
                    throw InvalidInput("table_formula: degenerate NLI configuration");
                }
                const double c = 2.0 * std::sqrt(nli.n0 * nli.n0p * (nli.n0 + 1.0) * (nli.n0p + 1.0)) / a0;
                const double c2 = std::min(c * c, 1.0);
                out.distillation = 2.0 / (m * c2 * a0) + (2.0 + c2 / 2.0) / (m * c2);
                const double ratio = (1.0 + a0) / a0;
                out.working_point =
                    (1.0 / a0 + (1.0 - c2) + std::sqrt((1.0 - c2) * (ratio * ratio - c2))) /
                    (2.0 * m * c2);
            }
            break;
        }
        case TableRegime::PerfectContrast: {
            const double eta = noise.eta;
            if (const auto* mzi = std::get_if<MziSpec>(&spec)) {
                if (mzi->t1 != 0.5 || mzi->t2 != 0.5) {
                    throw InvalidInput("table_formula: perfect-contrast MZI requires balanced BSs");
                }
                const double en0 = eta * mzi->n0;
                if (!(en0 > 0.0)) throw InvalidInput("table_formula: zero detected signal");
                const double vn = nn * (1.0 + ln * nn);
                out.intrinsic = (1.0 + 2.0 * nn + 2.0 * vn / en0) / en0;
                out.has_intrinsic = true;
                out.distillation = 4.0 * out.intrinsic / m;
                out.working_point = out.intrinsic / m +
                    2.0 * std::sqrt(vn) * std::sqrt(vn + en0 * (1.0 + 2.0 * nn)) / (m * en0 * en0);
            } else {
                const auto& nli = std::get<NliSpec>(spec);
                if (nli.n0 != nli.n0p) {
                    throw InvalidInput("table_formula: perfect-contrast NLI requires equal gains");
                }
                const double g = eta * nli.n0 * (nli.n0 + 1.0);
                if (!(g > 0.0)) throw InvalidInput("table_formula: zero detected signal");
                const double vn = nn * (1.0 + ln * nn);
                out.intrinsic = (1.0 + 2.0 * nn + vn / (2.0 * g)) / (4.0 * g);
                out.has_intrinsic = true;
                out.distillation = 4.0 * out.intrinsic / m + 5.0 / (2.0 * m);
                out.working_point = out.intrinsic / m +
                    std::sqrt(vn) * std::sqrt(vn + 4.0 * g * (1.0 + 2.0 * nn + 4.0 * g)) /
                        (8.0 * m * g * g);
            }
            break;
        }
        case TableRegime::Spontaneous: {
            const double eta = noise.eta;
            if (!(eta > 0.0)) throw InvalidInput("table_formula: spontaneous regime requires eta > 0");
            if (const auto* mzi = std::get_if<MziSpec>(&spec)) {
                if (mzi->t1 != 0.5 || mzi->t2 != 0.5) {
                    throw InvalidInput("table_formula: spontaneous MZI requires balanced BSs");
                }
                const double n0 = mzi->n0;
                if (!(n0 > 0.0)) throw InvalidInput("table_formula: zero input intensity");
                out.regime_warning = n0 > 0.01;
                out.distillation = 4.0 * (2.0 - eta) / (m * eta * eta * n0);
                out.working_point = (2.0 + 2.0 * std::sqrt(1.0 - eta) - eta) / (m * eta * eta * n0);
            } else {
                const auto& nli = std::get<NliSpec>(spec);
                if (nli.n0 != nli.n0p) {
                    throw InvalidInput("table_formula: spontaneous NLI requires equal gains");
                }
                const double n0 = nli.n0;
                if (!(n0 > 0.0)) throw InvalidInput("table_formula: zero gain");
                out.regime_warning = n0 > 0.01;
                out.distillation = (1.0 + eta) / (2.0 * m * eta * eta * n0);
                out.working_point =
                    (1.0 + eta + std::sqrt((1.0 - eta) * (1.0 + 3.0 * eta))) /
                    (8.0 * m * eta * eta * n0);
            }
            break;
        }
    }
    return out;
}

// Full closed-form uncertainty budget of one configuration.
struct UncertaintyReport {
    double intrinsic = 0.0;      // Δφ0²
    double distillation = 0.0;   // Δφ_N²
    double scanning = 0.0;       // Δφ_θ²
    double working_point = 0.0;  // Δφ_WP²
    double wp_phase = 0.0;       // θ_WP in [0, pi]
    double phi1 = 0.0;
    double single_point = 0.0;   // Δφ² at the probe phase
    double probe_phase = 0.0;
};

}  // namespace qimd
