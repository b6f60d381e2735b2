#include "qimd/fock.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "qimd/fringe.hpp"
#include "qimd/numeric.hpp"
#include "qimd/statistics.hpp"

namespace {

using namespace qimd;

std::int64_t binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Exact enumeration oracle at eta = 9/25 (t = 3/5, r = 4/5): every amplitude
// term is an integer times 5^-T, so P(k) evaluates with no cancellation error.
std::vector<double> exact_distribution_eta_9_25(int m, int n) {
    const int total = m + n;
    std::vector<double> probs(static_cast<std::size_t>(total) + 1);
    const auto factorial = [](int x) {
        long double f = 1.0L;
        for (int i = 2; i <= x; ++i) f *= i;
        return f;
    };
    const long double pow5 = std::pow(5.0L, static_cast<long double>(2 * total));
    for (int k = 0; k <= total; ++k) {
        std::int64_t s = 0;
        for (int i = std::max(0, k - n); i <= std::min(m, k); ++i) {
            std::int64_t term = binom(m, i) * binom(n, k - i);
            for (int p = 0; p < n - k + 2 * i; ++p) term *= 3;
            for (int p = 0; p < m + k - 2 * i; ++p) term *= 4;
            s += (i % 2 == 0) ? term : -term;
        }
        const long double amp2 = static_cast<long double>(s) * static_cast<long double>(s);
        probs[static_cast<std::size_t>(k)] = static_cast<double>(
            factorial(k) * factorial(total - k) / (factorial(m) * factorial(n)) * amp2 / pow5);
    }
    return probs;
}

TEST(BsOutputDistribution, SinglePhotonSplit) {
    for (double eta : {0.0, 0.25, 0.5, 0.9, 1.0}) {
        const FockDistribution d = bs_output_distribution(1, 0, eta);
        ASSERT_EQ(d.probs.size(), 2u);
        EXPECT_NEAR(d.probs[0], 1.0 - eta, 1e-15);
        EXPECT_NEAR(d.probs[1], eta, 1e-15);
    }
}

TEST(BsOutputDistribution, HongOuMandel) {
    const FockDistribution d = bs_output_distribution(1, 1, 0.5);
    ASSERT_EQ(d.probs.size(), 3u);
    EXPECT_NEAR(d.probs[0], 0.5, 1e-15);
    EXPECT_NEAR(d.probs[1], 0.0, 1e-15);
    EXPECT_NEAR(d.probs[2], 0.5, 1e-15);
}

TEST(BsOutputDistribution, VacuumPartnerGivesBinomial) {
    const int m = 17;
    const double eta = 0.73;
    const FockDistribution d = bs_output_distribution(m, 0, eta);
    for (int k = 0; k <= m; ++k) {
        const double expected = static_cast<double>(binom(m, k)) * std::pow(eta, k) *
                                std::pow(1.0 - eta, m - k);
        EXPECT_NEAR(d.probs[static_cast<std::size_t>(k)], expected, 1e-13);
    }
}

TEST(BsOutputDistribution, MatchesExactEnumerationUpToTenPhotons) {
    const double eta = 0.36;  // 9/25
    for (int m = 0; m <= 5; ++m) {
        for (int n = 0; n <= 5; ++n) {
            if (m + n == 0) continue;
            const FockDistribution d = bs_output_distribution(m, n, eta);
            const std::vector<double> exact = exact_distribution_eta_9_25(m, n);
            ASSERT_EQ(d.probs.size(), exact.size());
            for (std::size_t k = 0; k < exact.size(); ++k) {
                EXPECT_NEAR(d.probs[k], exact[k], 1e-12) << "m=" << m << " n=" << n << " k=" << k;
            }
        }
    }
}

TEST(BsOutputDistribution, NormalizationAndMeanLinearity) {
    for (double eta : {0.17, 0.5, 0.71}) {
        for (int m : {0, 3, 9, 14}) {
            for (int n : {0, 2, 7, 12}) {
                if (m + n == 0) continue;
                const FockDistribution d = bs_output_distribution(m, n, eta);
                EXPECT_NEAR(d.sum(), 1.0, 1e-12) << m << " " << n << " " << eta;
                EXPECT_NEAR(d.mean(), eta * m + (1.0 - eta) * n, 1e-10);
            }
        }
    }
}

TEST(BsOutputDistribution, FockInputVarianceIdentity) {
    for (double eta : {0.36, 0.5, 0.8}) {
        for (int m : {1, 5, 12}) {
            for (int n : {0, 4, 12}) {
                const FockDistribution d = bs_output_distribution(m, n, eta);
                const double expected = eta * (1.0 - eta) * (m + n + 2.0 * m * n);
                EXPECT_NEAR(d.variance(), expected, 1e-10 * std::max(1.0, expected));
            }
        }
    }
}

TEST(BsOutputDistribution, LargeAsymmetricPairStaysNormalized) {
    // The kind of pair the Monte-Carlo sampler requests: m far beyond the
    // amplitude-sum regime, small noise occupation.
    const FockDistribution d = bs_output_distribution(900, 12, 0.8);
    EXPECT_NEAR(d.sum(), 1.0, 1e-9);
    EXPECT_NEAR(d.mean(), 0.8 * 900 + 0.2 * 12, 1e-6 * 722.4);
    const double expected_var = 0.8 * 0.2 * (900 + 12 + 2.0 * 900 * 12);
    EXPECT_NEAR(d.variance(), expected_var, 1e-6 * expected_var);
    // Balanced high-gain pair with the worst destructive interference.
    const FockDistribution b = bs_output_distribution(1000, 1000, 0.5);
    EXPECT_NEAR(b.sum(), 1.0, 1e-9);
    EXPECT_NEAR(b.variance(), 0.25 * (2000 + 2e6), 1e-6 * 0.25 * (2000 + 2e6));
}

// The two evaluation routes overlap for moderate sizes: the stitched
// recurrence must reproduce the amplitude-sum probabilities.
TEST(BsOutputDistribution, RecurrenceAgreesWithAmplitudeSum) {
    for (double eta : {0.3, 0.5, 0.8}) {
        for (auto [m, n] : {std::pair{60, 60}, std::pair{100, 20}, std::pair{13, 90}}) {
            const FockDistribution ref = bs_output_distribution(m, n, eta);
            const long double* lf =
                detail::log_factorial_table();
            std::vector<double> rec;
            detail::stitched_recurrence(m, n, eta, lf, rec);
            ASSERT_EQ(rec.size(), ref.probs.size());
            for (std::size_t k = 0; k < rec.size(); ++k) {
                EXPECT_NEAR(rec[k], ref.probs[k], 1e-11 + 1e-9 * ref.probs[k])
                    << "eta=" << eta << " m=" << m << " n=" << n << " k=" << k;
            }
        }
    }
}

TEST(BsOutputDistribution, HardCapRejected) {
    EXPECT_THROW(bs_output_distribution(4000, 200, 0.5), InvalidInput);
    EXPECT_THROW(bs_output_distribution(-1, 0, 0.5), InvalidInput);
    EXPECT_THROW(bs_output_distribution(1, 1, 1.5), InvalidInput);
    EXPECT_NO_THROW(bs_output_distribution(64, 64, 0.5));
}

TEST(AppendixVariance, SpotValuesAndIdentityChannel) {
    EXPECT_NEAR(appendix_variance(4.0, 4.0, 2.0, 2.0, 0.5), 7.0, 1e-12);
    EXPECT_NEAR(appendix_variance(4.0, 20.0, 2.0, 6.0, 0.5), 12.0, 1e-12);
    EXPECT_NEAR(appendix_variance(4.0, 20.0, 2.0, 6.0, 1.0), 20.0, 1e-12);
    EXPECT_NEAR(appendix_variance(4.0, 20.0, 2.0, 6.0, 0.0), 6.0, 1e-12);
}

TEST(AppendixVariance, AgreesWithReducedDetectedVariance) {
    for (double eta : {0.2, 0.5, 0.9}) {
        for (double lphi : {0.0, 1.0}) {
            for (double ln : {0.0, 1.0}) {
                FringeModel model;
                model.amplitude = 6.0;
                model.contrast = 0.7;
                model.noise_mean = 1.3;
                model.eta = eta;
                model.lambda_phi = lphi;
                model.lambda_n = ln;
                for (double phi : {0.0, 0.9, 2.4}) {
                    const double mean_i = fringe_signal(model, phi) / eta;
                    const double mean_n = model.noise_mean / (1.0 - eta);
                    const double var_i = mean_i * (1.0 + lphi * mean_i);
                    const double var_n = mean_n * (1.0 + ln * mean_n);
                    const double expected = detected_variance(model, phi);
                    EXPECT_NEAR(appendix_variance(mean_i, var_i, mean_n, var_n, eta), expected,
                                1e-12 * std::max(1.0, expected));
                }
            }
        }
    }
}

TEST(AppendixVariance, MatchesFockDistributionForFockInputs) {
    // Zero input variance specializes the identity to eta(1-eta)(m+n+2mn).
    for (int m : {2, 9}) {
        for (int n : {1, 6}) {
            const double eta = 0.62;
            const FockDistribution d = bs_output_distribution(m, n, eta);
            EXPECT_NEAR(d.variance(), appendix_variance(m, 0.0, n, 0.0, eta), 1e-10);
        }
    }
}

}  // namespace
