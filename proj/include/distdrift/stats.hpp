// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "distdrift/rng.hpp"

namespace distdrift {

inline double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

// Survival function of the Kolmogorov distribution, Q(lambda) =
// 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, 2.0 * sum));
}

inline double effective_sample_size(std::span<const double> weights) {
    double s = 0.0, s2 = 0.0;
    for (const double w : weights) {
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

// Self-normalized weighted mean with a delta-method standard error.
struct WeightedMoment {
    double mean = 0.0;
    double stderr_ = 0.0;
};

inline WeightedMoment weighted_mean_stderr(std::span<const double> values,
                                           std::span<const double> weights) {
    double ws = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        ws += weights[i];
        acc += weights[i] * values[i];
    }
    WeightedMoment m;
    m.mean = acc / ws;
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - m.mean;
        var += weights[i] * weights[i] * d * d;
    }
    m.stderr_ = std::sqrt(var) / ws;
    return m;
}

namespace detail {

struct SortedWeighted {
    std::vector<double> x;
    std::vector<double> cumw;  // normalized cumulative weights
};

inline SortedWeighted sort_weighted(std::span<const double> x, std::span<const double> w) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    SortedWeighted out;
    out.x.resize(x.size());
    out.cumw.resize(x.size());
    double total = 0.0;
    for (const double wi : w) total += wi;
    double acc = 0.0;
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.x[k] = x[idx[k]];
        acc += w[idx[k]];
        out.cumw[k] = acc / total;
    }
    return out;
}

}  // namespace detail

// sup |F1 - F2| between two weighted empirical CDFs.
inline double weighted_ks_distance(std::span<const double> x1, std::span<const double> w1,
                                   std::span<const double> x2, std::span<const double> w2) {
    const auto a = detail::sort_weighted(x1, w1);
    const auto b = detail::sort_weighted(x2, w2);
    double d = 0.0;
    std::size_t i = 0, j = 0;
    double fa = 0.0, fb = 0.0;
    while (i < a.x.size() || j < b.x.size()) {
        const double xa = i < a.x.size() ? a.x[i] : std::numeric_limits<double>::infinity();
        const double xb = j < b.x.size() ? b.x[j] : std::numeric_limits<double>::infinity();
        if (xa <= xb) fa = a.cumw[i++];
        if (xb <= xa) fb = b.cumw[j++];
        d = std::max(d, std::fabs(fa - fb));
    }
    return d;
}

struct KsResult {
    double distance = 0.0;
    double p_value = 1.0;
    double n_eff_1 = 0.0;
    double n_eff_2 = 0.0;  // 0 for one-sample tests
};

// One-sample weighted KS against a reference CDF; p-value from the Kolmogorov
// asymptotic with the effective sample size.
inline KsResult weighted_ks_vs_cdf(std::span<const double> x, std::span<const double> w,
                                   const std::function<double(double)>& cdf) {
    const auto s = detail::sort_weighted(x, w);
    double d = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
        const double f = cdf(s.x[k]);
        d = std::max(d, std::max(std::fabs(f - prev), std::fabs(f - s.cumw[k])));
        prev = s.cumw[k];
    }
    KsResult r;
    r.distance = d;
    r.n_eff_1 = effective_sample_size(w);
    r.p_value = kolmogorov_sf(std::sqrt(r.n_eff_1) * d);
    return r;
}

// Two-sample weighted KS. The p-value is a permutation bootstrap: the pooled
// (value, weight) pairs are relabelled at random, weights travelling with
// their observations, and the weighted distance is recomputed per replicate.
// This keeps the weight-value dependence of the estimator in the null
// distribution; with unit weights it reduces to the classical permutation KS.
inline KsResult weighted_two_sample_ks(std::span<const double> x1, std::span<const double> w1,
                                       std::span<const double> x2, std::span<const double> w2,
                                       std::size_t n_bootstrap = 200,
                                       std::uint64_t seed = 0x9e3779b97f4a7c15ull) {
    KsResult r;
    r.distance = weighted_ks_distance(x1, w1, x2, w2);
    r.n_eff_1 = effective_sample_size(w1);
    r.n_eff_2 = effective_sample_size(w2);

    const std::size_t n1 = x1.size(), n = n1 + x2.size();
    std::vector<double> pool_x(x1.begin(), x1.end());
    pool_x.insert(pool_x.end(), x2.begin(), x2.end());
    std::vector<double> pool_w(w1.begin(), w1.end());
    pool_w.insert(pool_w.end(), w2.begin(), w2.end());

    const NormalStream stream(seed, 0);
    std::uint32_t draw_index = 0;
    std::vector<std::size_t> perm(n);
    std::vector<double> g1x(n1), g1w(n1), g2x(n - n1), g2w(n - n1);

    std::size_t exceed = 0;
    for (std::size_t b = 0; b < n_bootstrap; ++b) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        for (std::size_t i = n - 1; i > 0; --i) {
            const double u = stream.uniform(substream::kBootstrap, draw_index++);
            const auto j = std::min(static_cast<std::size_t>(u * static_cast<double>(i + 1)), i);
            std::swap(perm[i], perm[j]);
        }
        for (std::size_t k = 0; k < n1; ++k) {
            g1x[k] = pool_x[perm[k]];
            g1w[k] = pool_w[perm[k]];
        }
        for (std::size_t k = n1; k < n; ++k) {
            g2x[k - n1] = pool_x[perm[k]];
            g2w[k - n1] = pool_w[perm[k]];
        }
        if (weighted_ks_distance(g1x, g1w, g2x, g2w) >= r.distance) ++exceed;
    }
    r.p_value = static_cast<double>(exceed + 1) / static_cast<double>(n_bootstrap + 1);
    return r;
}

// Bootstrap standard error of the plain mean of a sample.
inline double bootstrap_stderr_mean(std::span<const double> values, std::size_t n_bootstrap,
                                    std::uint64_t seed) {
    const NormalStream stream(seed, 1);
    std::uint32_t draw_index = 0;
    const std::size_t n = values.size();
    std::vector<double> means(n_bootstrap);
    for (std::size_t b = 0; b < n_bootstrap; ++b) {
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double u = stream.uniform(substream::kBootstrap, draw_index++);
            acc += values[std::min(static_cast<std::size_t>(u * static_cast<double>(n)), n - 1)];
        }
        means[b] = acc / static_cast<double>(n);
    }
    double mean = 0.0;
    for (const double m : means) mean += m;
    mean /= static_cast<double>(n_bootstrap);
    double var = 0.0;
    for (const double m : means) var += (m - mean) * (m - mean);
    return std::sqrt(var / static_cast<double>(n_bootstrap - 1));
}

// Least-squares slope of y against x.
inline double ls_slope(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace distdrift
