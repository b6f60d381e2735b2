#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "qimd/errors.hpp"

namespace qimd {

// Phase-jitter presets for common tunable-phase hardware (radians).
inline constexpr double kPiezoJitter = 0.010;
inline constexpr double kSlmJitter = 0.050;

// Equally spaced phase-shifting plan: M >= 3 tunable phases
// theta_j = 2 pi j / M, j = 1..M, spanning (0, 2pi], each set with the same
// jitter dtheta.
struct ScanPlan {
    int steps = 3;
    double theta_jitter = 0.0;

    ScanPlan() = default;
    explicit ScanPlan(int m, double jitter = 0.0) : steps(m), theta_jitter(jitter) {
        validate();
    }

    void validate() const {
        if (steps < 3) throw InvalidInput("ScanPlan: need at least 3 steps");
        if (!(theta_jitter >= 0.0) || !std::isfinite(theta_jitter)) {
            throw InvalidInput("ScanPlan: theta jitter must be finite and >= 0");
        }
    }

    double theta(int j) const noexcept {  // j = 1..M
        return 2.0 * std::numbers::pi * j / steps;
    }

    std::vector<double> thetas() const {
        std::vector<double> out(static_cast<std::size_t>(steps));
        for (int j = 1; j <= steps; ++j) out[static_cast<std::size_t>(j - 1)] = theta(j);
        return out;
    }
};

}  // namespace qimd
