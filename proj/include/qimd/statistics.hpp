#pragma once

#include <cmath>

#include "qimd/errors.hpp"

namespace qimd {

// Photon-number statistics of a single mode. The lambda parameter selects the
// variance law Δn² = n(1 + λn): λ = 0 Poissonian (coherent light), λ = 1
// thermal (squeezed vacuum, single mode).
enum class PhotonStatistics { Poissonian, Thermal };

inline double lambda_of(PhotonStatistics stats) noexcept {
    return stats == PhotonStatistics::Thermal ? 1.0 : 0.0;
}

/// Variance of the photon number for a mode with mean `n`.
inline double statistics_variance(PhotonStatistics stats, double n) {
    if (!(n >= 0.0) || !std::isfinite(n)) {
        throw InvalidInput("statistics_variance: mean photon number must be finite and >= 0");
    }
    return n * (1.0 + lambda_of(stats) * n);
}

}  // namespace qimd
