// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "distdrift/coefficients.hpp"
#include "distdrift/errors.hpp"
#include "distdrift/harmonic.hpp"
#include "distdrift/path_functional.hpp"
#include "distdrift/rng.hpp"

namespace distdrift {

enum class Scheme { TransformedEuler, GirsanovWeighted };

inline const char* to_string(Scheme s) {
    return s == Scheme::TransformedEuler ? "transformed-euler" : "girsanov-weighted";
}

struct SimConfig {
    double t_horizon = 1.0;
    std::size_t n_steps = 1024;
    std::size_t n_paths = 1;
    double x0 = 0.0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::TransformedEuler;

    double grid_exit_fraction_cap = 0.01;  // fraction of paths allowed to clamp
    double ess_floor_fraction = 0.1;       // weighted scheme: ESS floor as share of N
    std::size_t threads = 0;               // 0: decide from DISTDRIFT_THREADS / hardware

    void validate(const UniformGrid& grid) const {
        if (!(t_horizon > 0.0)) throw std::invalid_argument("t_horizon must be positive");
        if (n_steps < 2) throw std::invalid_argument("n_steps must be >= 2");
        if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
        if (!grid.contains(x0)) throw std::invalid_argument("x0 outside the coefficient grid");
    }
};

inline std::size_t resolve_thread_count(std::size_t requested, std::size_t n_paths) {
    std::size_t t = requested;
    if (t == 0) {
        if (const char* env = std::getenv("DISTDRIFT_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) t = static_cast<std::size_t>(v);
        }
        if (t == 0) t = std::max<std::size_t>(std::thread::hardware_concurrency(), 1);
    }
    return std::max<std::size_t>(1, std::min(t, std::max<std::size_t>(n_paths / 64, 1)));
}

// Simulated ensemble: states on the original and transformed side, the driving
// increments, and one importance weight per path (1.0 for the direct scheme).
struct PathEnsemble {
    double t_horizon = 0.0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::TransformedEuler;
    double x0 = 0.0;

    std::vector<double> times;         // n_steps + 1
    std::vector<double> x_paths;       // row-major n_paths x (n_steps + 1)
    std::vector<double> y_paths;       // row-major n_paths x (n_steps + 1)
    std::vector<double> w_increments;  // row-major n_paths x n_steps
    std::vector<double> weights;       // n_paths
    std::size_t grid_exit_paths = 0;   // paths that clamped at least once

    double dt() const { return t_horizon / static_cast<double>(n_steps); }

    std::span<const double> x_path(std::size_t i) const {
        return {x_paths.data() + i * (n_steps + 1), n_steps + 1};
    }
    std::span<const double> y_path(std::size_t i) const {
        return {y_paths.data() + i * (n_steps + 1), n_steps + 1};
    }
    std::span<const double> increments(std::size_t i) const {
        return {w_increments.data() + i * n_steps, n_steps};
    }
    double x_terminal(std::size_t i) const { return x_path(i).back(); }

    double weight_sum() const {
        double acc = 0.0;
        for (const double w : weights) acc += w;
        return acc;
    }
    double effective_sample_size() const {
        double s = 0.0, s2 = 0.0;
        for (const double w : weights) {
            s += w;
            s2 += w * w;
        }
        return s2 > 0.0 ? s * s / s2 : 0.0;
    }
};

namespace detail {

struct PathScratch {
    std::vector<double> x;  // filled prefix, reused across paths
};

// One Euler path on the transformed equation. When `drifted` is set the step
// includes the transported functional (left-point rule on the accumulated
// prefix); otherwise the weighted scheme's log-density accumulates instead.
template <bool Drifted>
inline void euler_path(const SimConfig& cfg, const HarmonicMap& map,
                       const CoefficientSet* coeffs, const PathFunctional& gamma,
                       std::size_t path_id, std::span<double> x_out,
                       std::span<double> y_out, std::span<double> w_out, double& weight,
                       bool& clamped) {
    const std::size_t n = cfg.n_steps;
    const double dt = cfg.t_horizon / static_cast<double>(n);
    const double sqrt_dt = std::sqrt(dt);
    const NormalStream stream(cfg.seed, path_id);

    const double y_lo = map.image_min(), y_hi = map.image_max();
    std::size_t inv_hint = map.grid().size() / 2;
    std::size_t s0_hint = map.grid().size() / 2;

    double y = map.h(cfg.x0);
    double x = cfg.x0;
    double log_weight = 0.0;
    clamped = false;

    GammaEvaluator eval(gamma, dt, n);
    x_out[0] = x;
    y_out[0] = y;

    for (std::size_t k = 0; k < n; ++k) {
        const double gamma_k = eval.push_and_eval(x);
        const double dw = sqrt_dt * stream.normal(substream::kBrownianBase,
                                                  static_cast<std::uint32_t>(k));
        w_out[k] = dw;
        const double s0 = map.sigma0(y, s0_hint);
        double y_next = y + s0 * dw;
        if constexpr (Drifted) {
            y_next += map.h_prime(x) * gamma_k * dt;
        } else {
            const double gamma_tilde = gamma_k / coeffs->sigma(x);
            log_weight += gamma_tilde * dw - 0.5 * gamma_tilde * gamma_tilde * dt;
        }
        if (y_next < y_lo) {
            y_next = y_lo;
            clamped = true;
        } else if (y_next > y_hi) {
            y_next = y_hi;
            clamped = true;
        }
        y = y_next;
        x = map.h_inverse(y, inv_hint);
        x_out[k + 1] = x;
        y_out[k + 1] = y;
    }
    weight = Drifted ? 1.0 : std::exp(log_weight);
}

template <bool Drifted>
inline PathEnsemble run_engine(const SimConfig& cfg, const HarmonicMap& map,
                               const CoefficientSet* coeffs, const PathFunctional& gamma) {
    cfg.validate(map.grid());

    PathEnsemble e;
    e.t_horizon = cfg.t_horizon;
    e.n_paths = cfg.n_paths;
    e.n_steps = cfg.n_steps;
    e.seed = cfg.seed;
    e.scheme = Drifted ? Scheme::TransformedEuler : Scheme::GirsanovWeighted;
    e.x0 = cfg.x0;

    const std::size_t n = cfg.n_steps, N = cfg.n_paths;
    e.times.resize(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        e.times[k] = cfg.t_horizon * static_cast<double>(k) / static_cast<double>(n);
    e.x_paths.resize(N * (n + 1));
    e.y_paths.resize(N * (n + 1));
    e.w_increments.resize(N * n);
    e.weights.resize(N);

    std::atomic<std::size_t> exits{0};
    const auto worker = [&](std::size_t begin, std::size_t end) {
        std::size_t local_exits = 0;
        for (std::size_t i = begin; i < end; ++i) {
            bool clamped = false;
            euler_path<Drifted>(cfg, map, coeffs, gamma, i,
                                {e.x_paths.data() + i * (n + 1), n + 1},
                                {e.y_paths.data() + i * (n + 1), n + 1},
                                {e.w_increments.data() + i * n, n}, e.weights[i], clamped);
            if (clamped) ++local_exits;
        }
        exits += local_exits;
    };

    const std::size_t n_threads = resolve_thread_count(cfg.threads, N);
    if (n_threads <= 1) {
        worker(0, N);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (N + n_threads - 1) / n_threads;
        for (std::size_t t = 0; t < n_threads; ++t) {
            const std::size_t b = t * chunk, f = std::min(N, b + chunk);
            if (b >= f) break;
            pool.emplace_back(worker, b, f);
        }
        for (auto& th : pool) th.join();
    }
    e.grid_exit_paths = exits.load();

    if (static_cast<double>(e.grid_exit_paths) >
        cfg.grid_exit_fraction_cap * static_cast<double>(N))
        throw GridExitLimit(std::to_string(e.grid_exit_paths) + " of " + std::to_string(N) +
                            " paths clamped at the grid edge");

    if (!Drifted) {
        const double ess = e.effective_sample_size();
        if (ess < cfg.ess_floor_fraction * static_cast<double>(N))
            throw WeightDegenerate("effective sample size " + std::to_string(ess) +
                                   " below floor " +
                                   std::to_string(cfg.ess_floor_fraction *
                                                  static_cast<double>(N)));
    }
    return e;
}

}  // namespace detail

// Euler-Maruyama on the transformed equation with the transported functional
// as drift; states are mapped back through the inverse at every node.
inline PathEnsemble simulate_transformed(const SimConfig& cfg, const HarmonicMap& map,
                                         const PathFunctional& gamma) {
    SimConfig c = cfg;
    c.scheme = Scheme::TransformedEuler;
    return detail::run_engine<true>(c, map, nullptr, gamma);
}

// Simulates the driftless transformed dynamics and accumulates per path the
// exponential change-of-measure density
//   log V_T = sum Gamma~(t_k, X^{t_k}) dW_k - 1/2 sum Gamma~^2 dt.
// Expectations under the reweighted ensemble estimate laws of the drifted
// solution.
inline PathEnsemble simulate_weighted(const SimConfig& cfg, const HarmonicMap& map,
                                      const CoefficientSet& coeffs,
                                      const PathFunctional& gamma) {
    SimConfig c = cfg;
    c.scheme = Scheme::GirsanovWeighted;
    return detail::run_engine<false>(c, map, &coeffs, gamma);
}

// ---------------------------------------------------------------------------
// Exponential-moment preflight: the coarsest uniform partition of [0, T] with
// c_i = (3/2) (t_i - t_{i-1}) K^2 k < 1/2,  k = sup(sigma0)^2 * T,
// which certifies that the change-of-measure density is a true martingale.
// ---------------------------------------------------------------------------
struct PartitionPlan {
    std::size_t n_intervals = 0;
    std::vector<double> boundaries;
    std::vector<double> c_values;
    double k_bound = 0.0;       // sup(sigma0)^2 * T
    double sigma0_sup = 0.0;
    bool pass = false;
};

inline PartitionPlan preflight_novikov(const SimConfig& cfg, const HarmonicMap& map,
                                       const PathFunctional& gamma,
                                       double sigma0_cap = 1e6) {
    const double sup = map.sigma0_sup();
    if (!(sup < sigma0_cap))
        throw UnboundedSigma0("sigma0 sup " + std::to_string(sup) + " exceeds cap " +
                              std::to_string(sigma0_cap));
    PartitionPlan plan;
    plan.sigma0_sup = sup;
    plan.k_bound = sup * sup * cfg.t_horizon;
    const double growth_k = gamma.growth_K;

    // delta < 1 / (3 K^2 k) with delta = T / n, strictly
    const double x = 3.0 * growth_k * growth_k * plan.k_bound * cfg.t_horizon;
    const std::size_t n = static_cast<std::size_t>(std::floor(x)) + 1;
    plan.n_intervals = n;
    plan.boundaries.resize(n + 1);
    plan.c_values.resize(n);
    const double delta = cfg.t_horizon / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i)
        plan.boundaries[i] = cfg.t_horizon * static_cast<double>(i) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        plan.c_values[i] = 1.5 * delta * growth_k * growth_k * plan.k_bound;
    plan.pass = true;
    for (const double c : plan.c_values) plan.pass = plan.pass && c < 0.5;
    return plan;
}

// ---------------------------------------------------------------------------
// Single-path runs on externally supplied increments. Used by the refinement
// diagnostics, where several resolutions must share one driving path.
// ---------------------------------------------------------------------------
struct SinglePath {
    std::vector<double> x;
    std::vector<double> y;
};

inline SinglePath euler_transformed_on_increments(const HarmonicMap& map,
                                                  const PathFunctional& gamma, double x0,
                                                  double t_horizon,
                                                  std::span<const double> increments) {
    const std::size_t n = increments.size();
    const double dt = t_horizon / static_cast<double>(n);
    const double y_lo = map.image_min(), y_hi = map.image_max();
    std::size_t inv_hint = map.grid().size() / 2;
    std::size_t s0_hint = map.grid().size() / 2;

    SinglePath out;
    out.x.resize(n + 1);
    out.y.resize(n + 1);
    double y = map.h(x0), x = x0;
    out.x[0] = x;
    out.y[0] = y;
    GammaEvaluator eval(gamma, dt, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double gamma_k = eval.push_and_eval(x);
        const double s0 = map.sigma0(y, s0_hint);
        double y_next = y + s0 * increments[k] + map.h_prime(x) * gamma_k * dt;
        y_next = std::clamp(y_next, y_lo, y_hi);
        y = y_next;
        x = map.h_inverse(y, inv_hint);
        out.x[k + 1] = x;
        out.y[k + 1] = y;
    }
    return out;
}

}  // namespace distdrift
