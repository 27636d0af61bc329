#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <span>
#include <type_traits>
#include <vector>

#include "spraydot/error.hpp"
#include "spraydot/parallel.hpp"
#include "spraydot/random.hpp"

namespace spraydot {

/// Poisson intensity MLE: the sample mean.
template <typename Range>
double poisson_mle(const Range& counts) {
    if (std::empty(counts)) throw DataError("Poisson fit needs at least one count");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto c : counts) {
        if constexpr (std::is_signed_v<std::remove_cvref_t<decltype(c)>>)
            if (c < 0) throw DataError("Poisson counts must be non-negative");
        sum += static_cast<double>(c);
        ++n;
    }
    return sum / static_cast<double>(n);
}

/// Exponential rate MLE, 1 / mean.
inline double exponential_mle(std::span<const double> values) {
    if (values.empty()) throw DataError("Exponential fit needs at least one value");
    double sum = 0.0;
    for (const double v : values) {
        if (!(v > 0.0)) throw DataError("Exponential fit needs strictly positive values");
        sum += v;
    }
    return static_cast<double>(values.size()) / sum;
}

inline double exponential_cdf(double x, double rate) noexcept { return x <= 0.0 ? 0.0 : -std::expm1(-rate * x); }

inline double exponential_quantile(double p, double rate) noexcept { return -std::log1p(-p) / rate; }

/// sup |ECDF - F| against Exp(rate), evaluated on both sides of every jump.
inline double ks_statistic(std::span<const double> values, double rate) {
    if (values.empty()) throw DataError("KS statistic of an empty sample");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const auto n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = exponential_cdf(x[i], rate);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

struct KsResult {
    double rate = 0.0;
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t bootstrap = 0;
};

/// KS goodness of fit to an Exponential with the rate estimated from the data.
/// The null distribution of the statistic is obtained by parametric bootstrap:
/// each replicate draws n values from Exp(rate_hat), refits, and recomputes
/// the statistic. p = share of replicates at least as large as observed.
inline KsResult ks_test_exponential(std::span<const double> values, std::size_t bootstrap, std::uint64_t seed) {
    if (bootstrap < 100) throw ParameterError("KS bootstrap needs at least 100 replicates");
    KsResult out;
    out.rate = exponential_mle(values);
    out.statistic = ks_statistic(values, out.rate);
    out.bootstrap = bootstrap;
    std::vector<double> stats(bootstrap);
    const std::size_t n = values.size();
    parallel_for(bootstrap, [&](std::size_t b) {
        Rng rng(child_seed(seed, b));
        std::vector<double> sample(n);
        for (auto& v : sample) {
            do {
                v = rng.exponential(out.rate);
            } while (!(v > 0.0));
        }
        const double refit = exponential_mle(sample);
        stats[b] = ks_statistic(sample, refit);
    });
    const auto extreme = std::count_if(stats.begin(), stats.end(), [&](double s) { return s >= out.statistic; });
    out.p_value = static_cast<double>(extreme) / static_cast<double>(bootstrap);
    return out;
}

// ---------------------------------------------------------------------------
// Plot series

struct Histogram {
    std::vector<double> edges;  // bins + 1, increasing
    std::vector<std::size_t> counts;
};

/// Equal-width histogram over [lo, hi]; hi falls in the last bin.
inline Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
    Histogram h;
    if (bins == 0) throw ParameterError("histogram needs at least one bin");
    if (!(hi > lo)) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) h.edges.push_back(i == bins ? hi : lo + width * static_cast<double>(i));
    h.counts.assign(bins, 0);
    for (const double v : values) {
        auto bin = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
        bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(bin)];
    }
    return h;
}

inline double poisson_log_pmf(std::size_t k, double lambda) noexcept {
    const auto kd = static_cast<double>(k);
    if (lambda == 0.0) return k == 0 ? 0.0 : -INFINITY;
    return kd * std::log(lambda) - lambda - std::lgamma(kd + 1.0);
}

/// Poisson pmf on 0..K, where K covers `max_count` and extends until the
/// remaining upper-tail mass is below `tail`.
inline std::vector<double> poisson_pmf_series(double lambda, std::size_t max_count, double tail = 1e-12) {
    std::vector<double> pmf;
    double cumulative = 0.0;
    for (std::size_t k = 0;; ++k) {
        const double p = std::exp(poisson_log_pmf(k, lambda));
        pmf.push_back(p);
        cumulative += p;
        if (k >= max_count && static_cast<double>(k) >= lambda && 1.0 - cumulative < tail) break;
        if (k > max_count + 100 + static_cast<std::size_t>(20.0 * (lambda + std::sqrt(lambda) + 1.0))) break;
    }
    return pmf;
}

inline double exponential_density(double x, double rate) noexcept {
    return x < 0.0 ? 0.0 : rate * std::exp(-rate * x);
}

/// Silverman's rule-of-thumb bandwidth for a Gaussian kernel.
inline double silverman_bandwidth(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 1.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, n - 1);
        return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    if (!(spread > 0.0)) spread = sd > 0.0 ? sd : 1.0;
    return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

inline double gaussian_kde(std::span<const double> values, double bandwidth, double x) noexcept {
    constexpr double inv_sqrt_2pi = 0.3989422804014327;
    double s = 0.0;
    for (const double v : values) {
        const double u = (x - v) / bandwidth;
        s += std::exp(-0.5 * u * u);
    }
    return inv_sqrt_2pi * s / (static_cast<double>(values.size()) * bandwidth);
}

struct QqPoint {
    double theoretical = 0.0;  // F^-1((i - 0.5) / n)
    double empirical = 0.0;    // i-th order statistic
};

inline std::vector<QqPoint> exponential_qq(std::span<const double> values, double rate) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<QqPoint> out;
    out.reserve(sorted.size());
    const auto n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        out.push_back({exponential_quantile((static_cast<double>(i) + 0.5) / n, rate), sorted[i]});
    return out;
}

struct FitReport {
    double lambda_p = 0.0;
    double lambda_e = 0.0;
    double ks_stat = 0.0;
    double ks_pvalue = 1.0;
    std::size_t n_dots = 0;
    std::size_t n_radii = 0;  // dots with positive radius, the Exponential sample
    std::size_t bootstrap = 0;
};

}  // namespace spraydot
