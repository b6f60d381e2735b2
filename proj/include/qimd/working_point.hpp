#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "qimd/errors.hpp"
#include "qimd/fringe.hpp"
#include "qimd/scan.hpp"
#include "qimd/uncertainty.hpp"

namespace qimd {

struct WorkingPointResult {
    double phase = 0.0;       // theta_WP in [0, pi]
    double variance = 0.0;    // minimal Δφ² (per M repeated measurements)
    bool at_boundary = false; // infimum attained only as phi -> 0
    int iterations = 0;
};

// Limits of f(phi) = ΔN²(phi) / (M (A C sin phi)²) at the scan endpoints.
// At phi -> 0 the numerator vanishes only for C = 1 and n_n = 0, where the
// second-order series gives 1/(2 A M); otherwise both endpoints diverge.
struct BoundaryLimits {
    double at_zero = std::numeric_limits<double>::infinity();
    double at_pi = std::numeric_limits<double>::infinity();
};

inline BoundaryLimits boundary_limits(const FringeModel& model, int steps) {
    detail::require_contrast(model);
    if (steps < 1) throw InvalidInput("boundary_limits: steps must be >= 1");
    BoundaryLimits out;
    if (model.noise_mean == 0.0 && model.contrast == 1.0) {
        out.at_zero = 1.0 / (2.0 * model.amplitude * steps);
    }
    // n_phi(pi) = A (1 + C) > 0, so the phi -> pi limit always diverges.
    return out;
}

namespace detail {

inline double wp_objective(const FringeModel& model, int steps, double phi) {
    const double s = std::sin(phi);
    const double slope = model.amplitude * model.contrast * s;
    return detected_variance(model, phi) / (steps * slope * slope);
}

}  // namespace detail

/// Numerically minimize the single-setting phase variance over phi in (0, pi):
/// 64-point coarse scan, golden-section refinement of the global coarse
/// minimum to 1e-10 rad, then comparison against the analytic endpoint limits.
inline WorkingPointResult minimize_phase_uncertainty(const FringeModel& model, int steps) {
    detail::require_contrast(model);
    if (steps < 1) throw InvalidInput("minimize_phase_uncertainty: steps must be >= 1");

    constexpr double kEdge = 1e-9;  // endpoint behaviour comes from the series limits
    constexpr double kPhaseTol = 1e-10;
    constexpr int kCoarsePoints = 64;
    const double pi = std::numbers::pi;

    WorkingPointResult result;
    int evals = 0;
    const auto f = [&](double phi) {
        ++evals;
        const double v = detail::wp_objective(model, steps, phi);
        if (!std::isfinite(v)) {
            throw NumericError("minimize_phase_uncertainty: non-finite objective");
        }
        return v;
    };

    // Coarse scan over [kEdge, pi - kEdge].
    double best_phi = kEdge;
    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> grid(kCoarsePoints);
    for (int i = 0; i < kCoarsePoints; ++i) {
        grid[static_cast<std::size_t>(i)] =
            kEdge + (pi - 2.0 * kEdge) * i / (kCoarsePoints - 1);
        const double v = f(grid[static_cast<std::size_t>(i)]);
        if (v < best_val) {
            best_val = v;
            best_phi = grid[static_cast<std::size_t>(i)];
        }
    }

    // Bracket the global coarse minimum with its neighbours.
    const double step = (pi - 2.0 * kEdge) / (kCoarsePoints - 1);
    double lo = std::max(kEdge, best_phi - step);
    double hi = std::min(pi - kEdge, best_phi + step);

    // Golden-section refinement.
    constexpr double kInvGolden = 0.6180339887498949;
    double x1 = hi - kInvGolden * (hi - lo);
    double x2 = lo + kInvGolden * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    while (hi - lo > kPhaseTol) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvGolden * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvGolden * (hi - lo);
            f2 = f(x2);
        }
    }
    const double interior_phi = 0.5 * (lo + hi);
    const double interior_val = f(interior_phi);

    const BoundaryLimits limits = boundary_limits(model, steps);
    if (limits.at_zero <= interior_val * (1.0 + 1e-12)) {
        result.phase = 0.0;
        result.variance = limits.at_zero;
        result.at_boundary = true;
    } else {
        result.phase = interior_phi;
        result.variance = interior_val;
        result.at_boundary = false;
    }
    result.iterations = evals;
    return result;
}

// Parameter grid for the working-point versus distillation comparison maps,
// with the noise level tied to the signal level: n_n = (1 - eta) n0.
struct SweepGrid {
    std::vector<double> eta_axis;
    std::vector<double> n0_axis;
    PhotonStatistics noise_stats = PhotonStatistics::Thermal;

    void validate() const {
        if (eta_axis.empty() || n0_axis.empty()) return;  // empty grid allowed
        double prev = 0.0;
        for (double e : eta_axis) {
            if (!(e > prev && e <= 1.0)) {
                throw InvalidInput("SweepGrid: eta axis must be strictly increasing within (0, 1]");
            }
            prev = e;
        }
        prev = 0.0;
        for (double n : n0_axis) {
            if (!(n > prev) || !std::isfinite(n)) {
                throw InvalidInput("SweepGrid: n0 axis must be strictly increasing and positive");
            }
            prev = n;
        }
    }
};

enum class InterferometerKind { Mzi, Nli };

// Model behind one sweep cell: balanced MZI or equal-gain NLI (perfect
// contrast) with noise mean n0 behind a BS of transmittance eta.
inline FringeModel sweep_cell_model(InterferometerKind kind, double eta, double n0,
                                    PhotonStatistics noise_stats) {
    const NoiseChannel noise{eta, n0, noise_stats};
    if (kind == InterferometerKind::Mzi) {
        return derive_fringe(MziSpec{n0, 0.5, 0.5}, noise);
    }
    return derive_fringe(NliSpec{n0, n0}, noise);
}

struct RatioCell {
    double eta = 0.0;
    double n0 = 0.0;
    double wp = 0.0;            // Δφ_WP²
    double distillation = 0.0;  // Δφ_N²
    double ratio = 0.0;
    bool below_shot_noise = false;  // Δφ_WP² <= 1/n0
};

/// Ratio map Δφ_WP² / Δφ_N² over the grid; rows ordered n0-major then eta.
/// Both uncertainties scale as 1/M, so M cancels in the ratio; the reported
/// absolute values use the requested step count.
inline std::vector<RatioCell> ratio_map(const SweepGrid& grid, InterferometerKind kind,
                                        int steps) {
    grid.validate();
    if (steps < 1) throw InvalidInput("ratio_map: steps must be >= 1");
    const ScanPlan dist_plan(std::max(steps, 3));
    const double dist_scale = static_cast<double>(dist_plan.steps) / steps;
    std::vector<RatioCell> cells;
    cells.reserve(grid.n0_axis.size() * grid.eta_axis.size());
    for (double n0 : grid.n0_axis) {
        for (double eta : grid.eta_axis) {
            const FringeModel model = sweep_cell_model(kind, eta, n0, grid.noise_stats);
            RatioCell cell;
            cell.eta = eta;
            cell.n0 = n0;
            cell.wp = wp_uncertainty_closed(model, steps).variance;
            cell.distillation = distillation_uncertainty(model, dist_plan) * dist_scale;
            cell.ratio = cell.wp / cell.distillation;
            cell.below_shot_noise = cell.wp <= 1.0 / n0;
            cells.push_back(cell);
        }
    }
    return cells;
}

struct ShotNoiseBoundary {
    std::optional<double> eta;  // empty when Δφ_WP² n0 - 1 has one sign over the interval
    double residual = 0.0;      // Δφ_WP²(eta*) n0 - 1 at the root
    int iterations = 0;
};

/// Locate eta* with Δφ_WP²(eta*, n0) = 1/n0 for an equal-gain NLI with
/// n_n = (1 - eta) n0, by Brent's method on g(eta) = Δφ_WP² n0 - 1.
///
/// The boundary converges to eta = 1/3 for n0 -> infinity with Poissonian
/// noise statistics (the default here). With thermal noise the xi² term of
/// phi1 keeps sqrt(phi1) at the same order as Δφ0² and the limit moves to
/// 1/2 instead; both variants are available through noise_stats.
inline ShotNoiseBoundary shot_noise_boundary(double n0, int steps = 1,
                                             PhotonStatistics noise_stats = PhotonStatistics::Poissonian,
                                             double eta_lo = 1e-6, double eta_hi = 1.0 - 1e-12) {
    if (!(n0 > 0.0) || !std::isfinite(n0)) {
        throw InvalidInput("shot_noise_boundary: n0 must be finite and > 0");
    }
    if (steps < 1) throw InvalidInput("shot_noise_boundary: steps must be >= 1");
    if (!(eta_lo > 0.0 && eta_hi <= 1.0 && eta_lo < eta_hi)) {
        throw InvalidInput("shot_noise_boundary: invalid eta interval");
    }

    ShotNoiseBoundary out;
    int evals = 0;
    const auto g = [&](double eta) {
        ++evals;
        const FringeModel model = sweep_cell_model(InterferometerKind::Nli, eta, n0, noise_stats);
        return wp_uncertainty_closed(model, steps).variance * n0 - 1.0;
    };

    double a = eta_lo, b = eta_hi;
    double fa = g(a), fb = g(b);
    if (fa * fb > 0.0) {
        out.iterations = evals;
        return out;  // no crossing over the requested interval
    }

    // Brent's method.
    double c = a, fc = fa;
    double d = b - a, e = d;
    constexpr double kTol = 1e-15;
    for (int iter = 0; iter < 200; ++iter) {
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + kTol;
        const double mid = 0.5 * (c - b);
        if (std::abs(mid) <= tol || fb == 0.0) break;
        if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
            const double s = fb / fa;
            double p, q;
            if (a == c) {
                p = 2.0 * mid * s;
                q = 1.0 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * mid * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::abs(p);
            if (2.0 * p < std::min(3.0 * mid * q - std::abs(tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = mid;
                e = d;
            }
        } else {
            d = mid;
            e = d;
        }
        a = b;
        fa = fb;
        b += std::abs(d) > tol ? d : (mid > 0.0 ? tol : -tol);
        fb = g(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a;
            fc = fa;
            e = d = b - a;
        }
    }

    out.eta = b;
    out.residual = fb;
    out.iterations = evals;
    return out;
}

}  // namespace qimd
