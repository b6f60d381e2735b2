#pragma once

#include <cmath>
#include <numbers>

namespace qimd {

// Neumaier-compensated accumulator; order-stable summation for aggregates
// that must not depend on worker count.
template <typename T = double>
struct CompensatedSum {
    T sum{};
    T carry{};

    void add(T value) noexcept {
        const T t = sum + value;
        if (std::abs(sum) >= std::abs(value)) {
            carry += (sum - t) + value;
        } else {
            carry += (value - t) + sum;
        }
        sum = t;
    }

    T value() const noexcept { return sum + carry; }
};

// Wrap an angle into (-pi, pi].
inline double wrap_pi(double x) noexcept {
    double r = std::remainder(x, 2.0 * std::numbers::pi);
    if (r <= -std::numbers::pi) r = std::numbers::pi;
    return r;
}

inline double relative_diff(double a, double b) noexcept {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (scale == 0.0) return 0.0;
    return std::abs(a - b) / scale;
}

}  // namespace qimd
