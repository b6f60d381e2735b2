#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qimd/errors.hpp"
#include "qimd/numeric.hpp"

namespace qimd {

inline constexpr int kFockHardCap = 4096;

namespace detail {

// Log-factorial table in long double, covering the full Fock cap. Built once
// (thread-safe static init) and immutable afterwards, so the pointer stays
// valid for concurrent readers.
inline const long double* log_factorial_table() {
    static const std::vector<long double> table = [] {
        std::vector<long double> t(static_cast<std::size_t>(kFockHardCap) + 2, 0.0L);
        for (std::size_t i = 2; i < t.size(); ++i) {
            t[i] = t[i - 1] + std::log(static_cast<long double>(i));
        }
        return t;
    }();
    return table.data();
}

// Minimal double-double arithmetic (error-free transforms via FMA); keeps the
// alternating-sign amplitude sums accurate well past the worst cancellation
// seen for m, n <= a few hundred.
struct DD {
    double hi = 0.0;
    double lo = 0.0;
};

inline DD dd_from(double x) { return {x, 0.0}; }

inline DD dd_two_sum(double a, double b) {
    const double s = a + b;
    const double bb = s - a;
    return {s, (a - (s - bb)) + (b - bb)};
}

inline DD dd_add(const DD& a, const DD& b) {
    DD s = dd_two_sum(a.hi, b.hi);
    s.lo += a.lo + b.lo;
    const double hi = s.hi + s.lo;
    return {hi, s.lo - (hi - s.hi)};
}

inline DD dd_mul(const DD& a, const DD& b) {
    const double p = a.hi * b.hi;
    double e = std::fma(a.hi, b.hi, -p);
    e += a.hi * b.lo + a.lo * b.hi;
    const double hi = p + e;
    return {hi, e - (hi - p)};
}

inline DD dd_mul_d(const DD& a, double b) {
    const double p = a.hi * b;
    double e = std::fma(a.hi, b, -p);
    e += a.lo * b;
    const double hi = p + e;
    return {hi, e - (hi - p)};
}

inline DD dd_div_d(const DD& a, double b) {
    const double q1 = a.hi / b;
    const double r = std::fma(-q1, b, a.hi) + a.lo;
    const double q2 = r / b;
    const double hi = q1 + q2;
    return {hi, q2 - (hi - q1)};
}

inline DD dd_div(const DD& a, const DD& b) {
    const double q1 = a.hi / b.hi;
    DD r = dd_add(a, dd_mul_d(b, -q1));
    const double q2 = r.hi / b.hi;
    r = dd_add(r, dd_mul_d(b, -q2));
    const double q3 = r.hi / b.hi;
    const DD q = dd_add(dd_two_sum(q1, q2), dd_from(q3));
    return q;
}

struct ScaledSum {
    double value = 0.0;  // scaled signed sum
    long double log_scale = 0.0L;
};

// Alternating Vandermonde-style amplitude sum
//   S(k) = sum_i C(m,i) C(n,k-i) (-rho)^i,   i in [max(0,k-n), min(m,k)],
// evaluated by a double-double ratio recurrence from the first term, rescaled
// to stay in range. log_scale holds ln of the true first term so that
// S_true = value * exp(log_scale). Accurate while the cancellation of the
// alternating terms stays within double-double resolution, which holds
// comfortably up to m + n ~ 128.
inline ScaledSum amplitude_sum(int m, int n, int k, double rho, const DD& rho_dd,
                               long double log_rho, const long double* lf) {
    const int i_lo = std::max(0, k - n);
    const int i_hi = std::min(m, k);

    ScaledSum out;
    out.log_scale = lf[m] - lf[i_lo] - lf[m - i_lo] + lf[n] - lf[k - i_lo] -
                    lf[n - k + i_lo] + static_cast<long double>(i_lo) * log_rho;

    const double sign0 = (i_lo % 2 == 0) ? 1.0 : -1.0;
    DD term = dd_from(sign0);
    DD sum = term;
    double peak = 1.0;

    for (int i = i_lo; i < i_hi; ++i) {
        // term_{i+1} / term_i = -rho (m-i)(k-i) / ((i+1)(n-k+i+1))
        const double num = static_cast<double>(m - i) * static_cast<double>(k - i);
        const double den = static_cast<double>(i + 1) * static_cast<double>(n - k + i + 1);
        term = dd_mul(term, rho_dd);
        term = dd_mul_d(term, -num);
        term = dd_div_d(term, den);
        sum = dd_add(sum, term);
        const double abs_term = std::abs(term.hi);
        if (abs_term > peak) peak = abs_term;

        const double ratio_mag = rho * num / den;
        if (ratio_mag < 0.999 && abs_term <= 1e-40 * peak) break;  // negligible tail

        if (abs_term > 1e250 || std::abs(sum.hi) > 1e250) {
            constexpr double kDown = 0x1p-1000;
            term.hi *= kDown;
            term.lo *= kDown;
            sum.hi *= kDown;
            sum.lo *= kDown;
            peak *= kDown;
            out.log_scale += 1000.0L * 0.6931471805599453094L;
        }
    }

    out.value = sum.hi + sum.lo;
    return out;
}

// Three-term recurrence of the output amplitudes in k (matrix elements of an
// SU(2) rotation):
//   s2 sqrt((k+1)(T-k)) A_{k+1} = [c2 (2k-T) - (m-n)] A_k
//                                 - s2 sqrt(k(T-k+1)) A_{k-1},
// with c2 = 2 eta - 1 and s2 = 2 sqrt(eta(1-eta)). Run forward from both
// tails toward the distribution peak (the stable direction on either side),
// stitched at the largest overlap magnitude, then normalized. The tails fix
// the seeds exactly: A_0 = ±sqrt(T!/(m!n!)) t^n r^m, A_T = sqrt(T!/(m!n!))
// t^m r^n.
inline void stitched_recurrence(int m, int n, double eta, const long double* lf,
                                std::vector<double>& probs) {
    const int total = m + n;
    const double c2 = 2.0 * eta - 1.0;
    const double s2 = 2.0 * std::sqrt(eta * (1.0 - eta));
    const long double log_t = 0.5L * std::log(static_cast<long double>(eta));
    const long double log_r = 0.5L * std::log1p(static_cast<long double>(-eta));
    const long double log_amp0 = 0.5L * (lf[total] - lf[m] - lf[n]);

    const int k_peak = std::clamp(
        static_cast<int>(std::llround(eta * m + (1.0 - eta) * n)), 0, total);
    const int overlap_lo = std::max(0, k_peak - 4);
    const int overlap_hi = std::min(total, k_peak + 4);

    std::vector<double> val(static_cast<std::size_t>(total) + 1, 0.0);
    std::vector<long double> off(static_cast<std::size_t>(total) + 1, 0.0L);

    const auto rescale = [](double& prev, double& cur, long double& offset) {
        const double mag = std::abs(cur);
        if (mag > 1e250 || (mag > 0.0 && mag < 1e-250)) {
            prev /= mag;
            cur /= mag;
            offset += std::log(static_cast<long double>(mag));
        }
    };

    // Forward sweep: seeds A_0 (and the k = 0 relation has no A_{-1} term).
    {
        double prev = 0.0;
        double cur = (m % 2 == 0) ? 1.0 : -1.0;
        long double offset = log_amp0 + n * log_t + m * log_r;
        val[0] = cur;
        off[0] = offset;
        for (int k = 0; k < overlap_hi; ++k) {
            const double a = (c2 * (2.0 * k - total) - (m - n)) / s2;
            const double next =
                (a * cur - std::sqrt(static_cast<double>(k) * (total - k + 1)) * prev) /
                std::sqrt(static_cast<double>(k + 1) * (total - k));
            prev = cur;
            cur = next;
            rescale(prev, cur, offset);
            val[static_cast<std::size_t>(k + 1)] = cur;
            off[static_cast<std::size_t>(k + 1)] = offset;
        }
    }

    std::vector<double> bval(static_cast<std::size_t>(total) + 1, 0.0);
    std::vector<long double> boff(static_cast<std::size_t>(total) + 1, 0.0L);
    {
        double prev = 0.0;  // A_{T+1} coefficient vanishes at k = T
        double cur = 1.0;
        long double offset = log_amp0 + m * log_t + n * log_r;
        bval[static_cast<std::size_t>(total)] = cur;
        boff[static_cast<std::size_t>(total)] = offset;
        for (int k = total; k > overlap_lo; --k) {
            const double a = (c2 * (2.0 * k - total) - (m - n)) / s2;
            const double next =
                (a * cur - std::sqrt(static_cast<double>(k + 1) * (total - k)) * prev) /
                std::sqrt(static_cast<double>(k) * (total - k + 1));
            prev = cur;
            cur = next;
            rescale(prev, cur, offset);
            bval[static_cast<std::size_t>(k - 1)] = cur;
            boff[static_cast<std::size_t>(k - 1)] = offset;
        }
    }

    // Stitch where both sweeps carry weight.
    int stitch = overlap_lo;
    long double best = -1e30L;
    for (int k = overlap_lo; k <= overlap_hi; ++k) {
        const double f = std::abs(val[static_cast<std::size_t>(k)]);
        const double b = std::abs(bval[static_cast<std::size_t>(k)]);
        if (f == 0.0 || b == 0.0) continue;
        const long double score = std::log(static_cast<long double>(f)) +
                                  off[static_cast<std::size_t>(k)] +
                                  std::log(static_cast<long double>(b)) +
                                  boff[static_cast<std::size_t>(k)];
        if (score > best) {
            best = score;
            stitch = k;
        }
    }
    const long double delta =
        std::log(std::abs(static_cast<long double>(val[static_cast<std::size_t>(stitch)]))) +
        off[static_cast<std::size_t>(stitch)] -
        std::log(std::abs(static_cast<long double>(bval[static_cast<std::size_t>(stitch)]))) -
        boff[static_cast<std::size_t>(stitch)];

    probs.assign(static_cast<std::size_t>(total) + 1, 0.0);
    for (int k = 0; k <= total; ++k) {
        const bool left = k <= stitch;
        const double v = left ? val[static_cast<std::size_t>(k)]
                              : bval[static_cast<std::size_t>(k)];
        const long double o = left ? off[static_cast<std::size_t>(k)]
                                   : boff[static_cast<std::size_t>(k)] + delta;
        const long double p = static_cast<long double>(v) * static_cast<long double>(v) *
                              std::exp(2.0L * o);
        probs[static_cast<std::size_t>(k)] = static_cast<double>(p);
    }

    // The stitch fixes only the relative scale; normalize explicitly.
    long double norm = 0.0L;
    for (double p : probs) norm += static_cast<long double>(p);
    if (!(norm > 0.0L) || !std::isfinite(static_cast<double>(norm))) {
        throw NumericError("bs_output_distribution: recurrence normalization failed");
    }
    for (double& p : probs) p = static_cast<double>(static_cast<long double>(p) / norm);
}

}  // namespace detail

// Photon-number distribution of the transmitted port of a beam splitter fed
// with the Fock state |m, n>.
struct FockDistribution {
    std::vector<double> probs;  // index k = 0 .. m+n
    int m = 0;
    int n = 0;
    double eta = 0.0;

    int total() const noexcept { return m + n; }

    double sum() const noexcept {
        CompensatedSum<double> s;
        for (double p : probs) s.add(p);
        return s.value();
    }

    double mean() const noexcept {
        CompensatedSum<double> s;
        for (std::size_t k = 0; k < probs.size(); ++k) s.add(static_cast<double>(k) * probs[k]);
        return s.value();
    }

    double variance() const noexcept {
        const double mu = mean();
        CompensatedSum<double> s;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            const double d = static_cast<double>(k) - mu;
            s.add(d * d * probs[k]);
        }
        return s.value();
    }
};

/// Exact output distribution |<k, m+n-k| U_BS(eta) |m, n>|².
///
/// For m + n <= 128 every probability is assembled from log-factorials and a
/// scaled double-double amplitude sum; the result is raw (not renormalized)
/// and accurate to ~1e-14 relative even through the worst destructive
/// interference at that size. Larger inputs are evaluated by the stable
/// two-sided amplitude recurrence, normalized by construction and
/// cross-checked against the exact output mean and variance.
inline FockDistribution bs_output_distribution(int m, int n, double eta,
                                               int hard_cap = kFockHardCap) {
    if (m < 0 || n < 0) throw InvalidInput("bs_output_distribution: photon numbers must be >= 0");
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidInput("bs_output_distribution: eta must lie in [0, 1]");
    // The configured cap can only tighten the built-in limit.
    if (m + n > std::min(hard_cap, kFockHardCap)) {
        throw InvalidInput("bs_output_distribution: m + n exceeds the hard cap");
    }

    const int total = m + n;
    FockDistribution out;
    out.m = m;
    out.n = n;
    out.eta = eta;
    out.probs.assign(static_cast<std::size_t>(total) + 1, 0.0);

    if (eta == 1.0) {  // identity: detected mode is the interferometer mode
        out.probs[static_cast<std::size_t>(m)] = 1.0;
        return out;
    }
    if (eta == 0.0) {  // fully reflecting: detected mode is the noise mode
        out.probs[static_cast<std::size_t>(n)] = 1.0;
        return out;
    }

    const long double* lf = detail::log_factorial_table();

    if (total > 128) {
        detail::stitched_recurrence(m, n, eta, lf, out.probs);
        const double mean_ref = eta * m + (1.0 - eta) * n;
        const double var_ref = eta * (1.0 - eta) * (m + n + 2.0 * static_cast<double>(m) * n);
        if (std::abs(out.mean() - mean_ref) > 1e-8 * (mean_ref + 1.0) ||
            std::abs(out.variance() - var_ref) > 1e-6 * (var_ref + 1.0)) {
            throw NumericError("bs_output_distribution: recurrence failed the moment check");
        }
        return out;
    }

    const double rho = eta / (1.0 - eta);
    const detail::DD rho_dd = detail::dd_div(detail::dd_from(eta), detail::dd_two_sum(1.0, -eta));
    const long double log_eta = std::log(static_cast<long double>(eta));
    const long double log_reta = std::log1p(static_cast<long double>(-eta));
    const long double log_rho = log_eta - log_reta;

    for (int k = 0; k <= total; ++k) {
        const detail::ScaledSum s = detail::amplitude_sum(m, n, k, rho, rho_dd, log_rho, lf);
        // P(k) = eta^(n-k) (1-eta)^(m+k) k!(T-k)!/(m!n!) S(k)^2
        const long double log_pref = static_cast<long double>(n - k) * log_eta +
                                     static_cast<long double>(m + k) * log_reta + lf[k] +
                                     lf[total - k] - lf[m] - lf[n];
        const long double log_p2 = log_pref + 2.0L * s.log_scale;
        const long double mag = std::exp(log_p2);
        out.probs[static_cast<std::size_t>(k)] =
            static_cast<double>(static_cast<long double>(s.value) *
                                static_cast<long double>(s.value) * mag);
    }
    return out;
}

/// Detected photon-number variance from the raw input moments through the BS
/// moment identity (independent, number-diagonal inputs):
///   ΔN² = η²<n_I²> + (1-η)²<n²> + 2η(1-η)<n_I><n>
///       + η(1-η)[<n_I>(<n>+1) + <n>(<n_I>+1)] - N².
/// An expression path independent of the reduced-variance regrouping.
inline double appendix_variance(double mean_i, double var_i, double mean_n, double var_n,
                                double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw InvalidInput("appendix_variance: eta must lie in [0, 1]");
    if (!(mean_i >= 0.0 && mean_n >= 0.0 && var_i >= 0.0 && var_n >= 0.0)) {
        throw InvalidInput("appendix_variance: moments must be >= 0");
    }
    const double sq_i = var_i + mean_i * mean_i;  // <n_I^2>
    const double sq_n = var_n + mean_n * mean_n;  // <n^2>
    const double mean_out = eta * mean_i + (1.0 - eta) * mean_n;
    return eta * eta * sq_i + (1.0 - eta) * (1.0 - eta) * sq_n +
           2.0 * eta * (1.0 - eta) * mean_i * mean_n +
           eta * (1.0 - eta) * (mean_i * (mean_n + 1.0) + mean_n * (mean_i + 1.0)) -
           mean_out * mean_out;
}

}  // namespace qimd
