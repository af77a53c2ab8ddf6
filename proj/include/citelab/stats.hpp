#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/negative_binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "citelab/error.hpp"

namespace citelab::stats {

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    double variance = 0.0;  // unbiased sample variance
};

// Two-pass mean and standard error, summed in index order.
template <class T>
MeanStderr mean_stderr(std::span<const T> xs) {
    MeanStderr r;
    if (xs.empty()) return r;
    double sum = 0.0;
    for (const T& x : xs) sum += static_cast<double>(x);
    const double n = static_cast<double>(xs.size());
    r.mean = sum / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (const T& x : xs) {
            const double d = static_cast<double>(x) - r.mean;
            ss += d * d;
        }
        r.variance = ss / (n - 1.0);
        r.stderr_ = std::sqrt(r.variance / n);
    }
    return r;
}

// Asymptotic Kolmogorov survival Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
inline double kolmogorov_q(double x) {
    if (x < 0.2) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        sum += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// One-sample Kolmogorov–Smirnov test of `sample` against a continuous cdf.
/// The p-value uses the Stephens small-sample correction to the asymptotic
/// Kolmogorov law.
template <class Cdf>
KsResult ks_test(std::vector<double> sample, Cdf&& cdf) {
    KsResult r;
    r.n = sample.size();
    if (sample.empty()) return r;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    r.statistic = d;
    const double sn = std::sqrt(n);
    r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    return r;
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    std::vector<int> bin_lower;  // bin i covers [bin_lower[i], bin_lower[i+1]); last bin is open
    std::vector<double> observed;
    std::vector<double> expected;
};

/**
 * Pearson chi-square goodness of fit of nonnegative integer counts against a
 * pmf on {0, 1, 2, ...}. Bins are formed left to right so that each holds an
 * expected count of at least `min_expected`; the final bin absorbs the tail.
 */
template <class Pmf>
ChiSquareResult chi_square_gof(std::span<const int> counts, Pmf&& pmf, double min_expected = 5.0) {
    ChiSquareResult r;
    const double n = static_cast<double>(counts.size());
    int max_count = 0;
    for (int c : counts) max_count = std::max(max_count, c);

    // Bin edges from the expected masses.
    double acc = 0.0, covered = 0.0;
    int lower = 0;
    for (int k = 0;; ++k) {
        const double p = pmf(k);
        acc += p;
        covered += p;
        const double tail = 1.0 - covered;
        if (acc * n >= min_expected && tail * n >= min_expected) {
            r.bin_lower.push_back(lower);
            r.expected.push_back(acc * n);
            lower = k + 1;
            acc = 0.0;
        }
        if (tail * n < min_expected) {
            r.bin_lower.push_back(lower);
            r.expected.push_back(std::max(0.0, 1.0 - (covered - acc)) * n);
            break;
        }
        if (k > max_count + 100000) break;
    }
    // The final bin must meet the threshold too; fold it into its neighbour.
    if (r.expected.size() > 1 && r.expected.back() < min_expected) {
        r.expected[r.expected.size() - 2] += r.expected.back();
        r.expected.pop_back();
        r.bin_lower.pop_back();
    }

    r.observed.assign(r.expected.size(), 0.0);
    for (int c : counts) {
        const auto it = std::upper_bound(r.bin_lower.begin(), r.bin_lower.end(), c);
        r.observed[static_cast<std::size_t>(it - r.bin_lower.begin()) - 1] += 1.0;
    }
    for (std::size_t i = 0; i < r.expected.size(); ++i) {
        const double d = r.observed[i] - r.expected[i];
        r.statistic += d * d / r.expected[i];
    }
    r.dof = static_cast<int>(r.expected.size()) - 1;
    r.p_value = r.dof > 0 ? boost::math::gamma_q(0.5 * r.dof, 0.5 * r.statistic) : 1.0;
    return r;
}

// P(X = k) for X ~ NegativeBinomial(r, p), the number of failures before the
// r-th success.
inline double negative_binomial_pmf(int r, double p, int k) {
    if (k < 0) return 0.0;
    return boost::math::pdf(boost::math::negative_binomial(static_cast<double>(r), p),
                            static_cast<double>(k));
}

}  // namespace citelab::stats
