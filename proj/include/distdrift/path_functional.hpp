// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distdrift/coefficients.hpp"
#include "distdrift/errors.hpp"
#include "distdrift/harmonic.hpp"
#include "distdrift/rng.hpp"

namespace distdrift {

// ---------------------------------------------------------------------------
// A stopped path (s, eta) on the uniform time grid of [0, T]: eta is known on
// [0, s] and frozen at eta(s) beyond. Only the prefix is stored, so reading
// past the stop time cannot expose future values; non-anticipativity holds by
// construction. Non-owning view; the caller keeps the buffer alive.
// ---------------------------------------------------------------------------
class StoppedPath {
public:
    StoppedPath(double dt, std::span<const double> prefix) : dt_(dt), prefix_(prefix) {
        if (prefix_.empty()) throw std::invalid_argument("stopped path needs >= 1 node");
        if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    }

    // Freezes a full path at node stop_index.
    static StoppedPath stop_at(double dt, std::span<const double> path, std::size_t stop_index) {
        return StoppedPath(dt, path.subspan(0, std::min(stop_index, path.size() - 1) + 1));
    }

    double dt() const { return dt_; }
    std::size_t stop_index() const { return prefix_.size() - 1; }
    double stop_time() const { return static_cast<double>(stop_index()) * dt_; }
    std::span<const double> prefix() const { return prefix_; }

    double at_index(std::size_t j) const {
        return j >= prefix_.size() ? prefix_.back() : prefix_[j];
    }

    // Linear interpolation in time below the stop time, frozen value beyond.
    double at_time(double t) const {
        if (t <= 0.0) return prefix_.front();
        if (t >= stop_time()) return prefix_.back();
        const double u = t / dt_;
        const auto j = static_cast<std::size_t>(u);
        const double frac = u - static_cast<double>(j);
        return prefix_[j] + frac * (prefix_[j + 1] - prefix_[j]);
    }

    double value_at_stop() const { return prefix_.back(); }

    double running_max() const {
        double m = prefix_.front();
        for (const double v : prefix_) m = std::max(m, v);
        return m;
    }

    // Trapezoid of eta over [0, s].
    double integral_to_stop() const {
        double acc = 0.0;
        for (std::size_t j = 0; j + 1 < prefix_.size(); ++j)
            acc += 0.5 * (prefix_[j] + prefix_[j + 1]) * dt_;
        return acc;
    }

private:
    double dt_;
    std::span<const double> prefix_;
};

// ---------------------------------------------------------------------------
// Path functionals
// ---------------------------------------------------------------------------

enum class FunctionalKind { Instantaneous, Delay, RunningMax, IntegralAverage, UserSupplied };

// Non-anticipative functional on stopped paths, with declared constants used
// by the assumption validators: growth_K (linear growth of the normalized
// functional), lipschitz_K (path-Lipschitz bound of the transported
// functional) and the sup of the functional on the zero path.
struct PathFunctional {
    FunctionalKind kind = FunctionalKind::Instantaneous;
    std::function<double(double)> g;
    double delay_lag = 0.0;
    std::function<double(const StoppedPath&)> user;
    std::string description;

    double growth_K = 1.0;
    double lipschitz_K = 1.0;
    double gamma_at_zero_sup = 0.0;

    static PathFunctional instantaneous(std::function<double(double)> g,
                                        std::string name = "instantaneous") {
        PathFunctional f;
        f.kind = FunctionalKind::Instantaneous;
        f.g = std::move(g);
        f.description = std::move(name);
        return f;
    }

    static PathFunctional delay(double lag, std::function<double(double)> g,
                                std::string name = "delay") {
        if (!(lag >= 0.0)) throw std::invalid_argument("delay lag must be >= 0");
        PathFunctional f;
        f.kind = FunctionalKind::Delay;
        f.g = std::move(g);
        f.delay_lag = lag;
        f.description = std::move(name);
        return f;
    }

    static PathFunctional running_max(std::function<double(double)> g,
                                      std::string name = "running-max") {
        PathFunctional f;
        f.kind = FunctionalKind::RunningMax;
        f.g = std::move(g);
        f.description = std::move(name);
        return f;
    }

    static PathFunctional integral_average(std::function<double(double)> g,
                                           std::string name = "integral-average") {
        PathFunctional f;
        f.kind = FunctionalKind::IntegralAverage;
        f.g = std::move(g);
        f.description = std::move(name);
        return f;
    }

    static PathFunctional user_supplied(std::function<double(const StoppedPath&)> fn,
                                        std::string name = "user") {
        PathFunctional f;
        f.kind = FunctionalKind::UserSupplied;
        f.user = std::move(fn);
        f.description = std::move(name);
        return f;
    }

    static PathFunctional zero() {
        auto f = instantaneous([](double) { return 0.0; }, "zero");
        f.growth_K = 1.0;
        f.lipschitz_K = 1.0;
        f.gamma_at_zero_sup = 0.0;
        return f;
    }

    // Same functional scaled by a constant factor.
    PathFunctional scaled(double factor) const {
        PathFunctional f = *this;
        if (kind == FunctionalKind::UserSupplied) {
            auto base = user;
            f.user = [base, factor](const StoppedPath& p) { return factor * base(p); };
        } else {
            auto base = g;
            f.g = [base, factor](double x) { return factor * base(x); };
        }
        f.description = description + " x " + std::to_string(factor);
        f.growth_K = growth_K * std::fabs(factor);
        f.lipschitz_K = lipschitz_K * std::fabs(factor);
        f.gamma_at_zero_sup = gamma_at_zero_sup * std::fabs(factor);
        return f;
    }
};

inline double eval_gamma(const PathFunctional& f, const StoppedPath& p) {
    switch (f.kind) {
        case FunctionalKind::Instantaneous:
            return f.g(p.value_at_stop());
        case FunctionalKind::Delay:
            return f.g(p.at_time(std::max(p.stop_time() - f.delay_lag, 0.0)));
        case FunctionalKind::RunningMax:
            return f.g(p.running_max());
        case FunctionalKind::IntegralAverage:
            return f.g(p.integral_to_stop());
        case FunctionalKind::UserSupplied:
            return f.user(p);
    }
    return 0.0;
}

// Functional normalized by the diffusion coefficient at the current state.
inline double eval_gamma_tilde(const PathFunctional& f, const CoefficientSet& coeffs,
                               const StoppedPath& p) {
    const double s = coeffs.sigma(p.value_at_stop());
    if (!(s > 0.0)) throw NonPositiveSigma("sigma <= 0 at the path endpoint");
    return eval_gamma(f, p) / s;
}

// Functional transported to the image side of the harmonic map:
// h'(h^{-1}(eta(s))) * Gamma(s, h^{-1} o eta^s). The argument path lives in
// the image space.
inline double eval_gamma_bar(const PathFunctional& f, const HarmonicMap& map,
                             const StoppedPath& p) {
    std::vector<double> pulled(p.stop_index() + 1);
    std::size_t hint = map.grid().size() / 2;
    for (std::size_t j = 0; j < pulled.size(); ++j)
        pulled[j] = map.h_inverse(p.at_index(j), hint);  // throws OutOfRange off the image
    const StoppedPath pulled_path(p.dt(), pulled);
    return map.h_prime(pulled_path.value_at_stop()) * eval_gamma(f, pulled_path);
}

// ---------------------------------------------------------------------------
// Incremental evaluator used inside simulation loops. Feeding node k returns
// Gamma(t_k, eta^{t_k}), bit-identical to eval_gamma on the same prefix
// (identical accumulation order), in O(1) amortized for the library kinds.
// ---------------------------------------------------------------------------
class GammaEvaluator {
public:
    GammaEvaluator(const PathFunctional& f, double dt, std::size_t n_steps)
        : f_(&f), dt_(dt) {
        buffer_.reserve(n_steps + 1);
    }

    double push_and_eval(double value) {
        buffer_.push_back(value);
        const std::size_t k = buffer_.size() - 1;
        switch (f_->kind) {
            case FunctionalKind::Instantaneous:
                return f_->g(value);
            case FunctionalKind::Delay: {
                const StoppedPath p(dt_, buffer_);
                return f_->g(p.at_time(std::max(p.stop_time() - f_->delay_lag, 0.0)));
            }
            case FunctionalKind::RunningMax:
                max_ = k == 0 ? value : std::max(max_, value);
                return f_->g(max_);
            case FunctionalKind::IntegralAverage:
                if (k > 0) integral_ += 0.5 * (buffer_[k - 1] + value) * dt_;
                return f_->g(integral_);
            case FunctionalKind::UserSupplied:
                return f_->user(StoppedPath(dt_, buffer_));
        }
        return 0.0;
    }

    void reset() {
        buffer_.clear();
        max_ = 0.0;
        integral_ = 0.0;
    }

    std::span<const double> prefix() const { return buffer_; }

private:
    const PathFunctional* f_;
    double dt_;
    std::vector<double> buffer_;
    double max_ = 0.0;
    double integral_ = 0.0;
};

// ---------------------------------------------------------------------------
// Empirical assumption validators. These can falsify a declared constant on a
// sample, never prove it; reports carry PASS-empirical semantics.
// ---------------------------------------------------------------------------
struct ValidationReport {
    bool pass = false;
    double worst_ratio = 0.0;
    double declared_constant = 0.0;
    double sup_at_zero = 0.0;  // Lipschitz check only
    std::string details;
};

// Linear-growth check of the normalized functional along pulled-back paths:
// sup_s |Gamma~(s, h^{-1} o eta^s)| <= K (1 + sup_s |eta(s)|) over the sample.
// Sample paths live in the image space, on the uniform grid of [0, T].
inline ValidationReport validate_growth(const PathFunctional& f, const HarmonicMap& map,
                                        const CoefficientSet& coeffs,
                                        std::span<const std::vector<double>> sample_paths,
                                        double t_horizon) {
    if (sample_paths.empty()) throw std::invalid_argument("empty path sample");
    ValidationReport report;
    report.declared_constant = f.growth_K;
    double worst = 0.0;
    for (const auto& eta : sample_paths) {
        const double dt = t_horizon / static_cast<double>(eta.size() - 1);
        std::vector<double> pulled(eta.size());
        std::size_t hint = map.grid().size() / 2;
        double sup_eta = 0.0;
        for (std::size_t j = 0; j < eta.size(); ++j) {
            pulled[j] = map.h_inverse(eta[j], hint);
            sup_eta = std::max(sup_eta, std::fabs(eta[j]));
        }
        GammaEvaluator eval(f, dt, eta.size() - 1);
        double sup_tilde = 0.0;
        for (std::size_t j = 0; j < pulled.size(); ++j) {
            const double gamma = eval.push_and_eval(pulled[j]);
            const double s = coeffs.sigma(pulled[j]);
            if (!(s > 0.0)) throw NonPositiveSigma("sigma <= 0 on a sample path");
            sup_tilde = std::max(sup_tilde, std::fabs(gamma / s));
        }
        worst = std::max(worst, sup_tilde / (f.growth_K * (1.0 + sup_eta)));
    }
    report.worst_ratio = worst;
    report.pass = worst <= 1.0;
    report.details = "growth ratio over " + std::to_string(sample_paths.size()) + " paths";
    return report;
}

// Declared continuity-modulus class for the transformed diffusion coefficient.
// Both classes have a non-integrable squared reciprocal at zero, which is what
// the uniqueness theory needs; a tabulated coefficient can only be checked
// against the declaration empirically.
enum class ModulusClass { Lipschitz, HalfHoelder };

inline double modulus_value(ModulusClass cls, double u) {
    return cls == ModulusClass::Lipschitz ? u : std::sqrt(u);
}

// Empirical check of |sigma0(y1) - sigma0(y2)| <= C * l(|y1 - y2|) over
// adjacent image nodes and random pairs.
inline ValidationReport validate_sigma0_modulus(const HarmonicMap& map, ModulusClass cls,
                                                double constant,
                                                std::size_t n_random_pairs = 2000,
                                                std::uint64_t seed = 1) {
    ValidationReport report;
    report.declared_constant = constant;
    const double lo = map.image_min(), hi = map.image_max();
    double worst = 0.0;
    const auto ratio = [&](double y1, double y2) {
        const double gap = std::fabs(y1 - y2);
        if (gap < 1e-14) return 0.0;
        return std::fabs(map.sigma0(y1) - map.sigma0(y2)) /
               (constant * modulus_value(cls, gap));
    };
    const auto h = map.h_values();
    for (std::size_t i = 0; i + 1 < h.size(); ++i)
        worst = std::max(worst, ratio(h[i], h[i + 1]));
    const NormalStream stream(seed, 0);
    for (std::uint32_t k = 0; k < n_random_pairs; ++k) {
        const double y1 = lo + (hi - lo) * stream.uniform(0, 2 * k);
        const double y2 = lo + (hi - lo) * stream.uniform(0, 2 * k + 1);
        worst = std::max(worst, ratio(y1, y2));
    }
    report.worst_ratio = worst;
    report.pass = worst <= 1.0;
    report.details = cls == ModulusClass::Lipschitz ? "lipschitz modulus"
                                                    : "1/2-hoelder modulus";
    return report;
}

// sup over the grid of the transported functional along the zero path.
inline double transported_sup_on_zero_path(const PathFunctional& f, const HarmonicMap& map,
                                           double t_horizon, std::size_t n_steps = 128) {
    const std::vector<double> zero_path(n_steps + 1, 0.0);
    const double dt = t_horizon / static_cast<double>(n_steps);
    std::vector<double> pulled(zero_path.size());
    std::size_t hint = map.grid().size() / 2;
    for (std::size_t j = 0; j < pulled.size(); ++j)
        pulled[j] = map.h_inverse(zero_path[j], hint);
    GammaEvaluator eval(f, dt, n_steps);
    double sup = 0.0;
    for (std::size_t j = 0; j < pulled.size(); ++j) {
        const double g = eval.push_and_eval(pulled[j]);
        sup = std::max(sup, std::fabs(map.h_prime(pulled[j]) * g));
    }
    return sup;
}

// Path-Lipschitz check of the transported functional over path pairs:
// |Gbar(s,eta1) - Gbar(s,eta2)| <= K (|eta1(s)-eta2(s)| + int_0^s |eta1-eta2|).
// Also evaluates sup_s |Gbar(s, 0)| on the zero path (finiteness check).
//
// Point-delay and running-max functionals cannot satisfy this bound for any
// finite K: a spike near the lagged (or argmax) time moves the functional by
// O(1) while both terms on the right stay arbitrarily small. Declare
// lipschitz_K = 0 on such functionals to record that no bound is claimed.
inline ValidationReport validate_lipschitz(
    const PathFunctional& f, const HarmonicMap& map,
    std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs,
    double t_horizon) {
    if (pairs.empty()) throw std::invalid_argument("empty pair sample");
    ValidationReport report;
    report.declared_constant = f.lipschitz_K;

    const auto gamma_bar_profile = [&](std::span<const double> eta, double dt) {
        std::vector<double> pulled(eta.size()), out(eta.size());
        std::size_t hint = map.grid().size() / 2;
        for (std::size_t j = 0; j < eta.size(); ++j) pulled[j] = map.h_inverse(eta[j], hint);
        GammaEvaluator eval(f, dt, eta.size() - 1);
        for (std::size_t j = 0; j < eta.size(); ++j) {
            const double g = eval.push_and_eval(pulled[j]);
            out[j] = map.h_prime(pulled[j]) * g;
        }
        return out;
    };

    double worst = 0.0;
    for (const auto& [eta1, eta2] : pairs) {
        if (eta1.size() != eta2.size() || eta1.size() < 2)
            throw std::invalid_argument("path pair sizes mismatch");
        const double dt = t_horizon / static_cast<double>(eta1.size() - 1);
        const auto g1 = gamma_bar_profile(eta1, dt);
        const auto g2 = gamma_bar_profile(eta2, dt);
        double integral_diff = 0.0;
        for (std::size_t j = 0; j < eta1.size(); ++j) {
            if (j > 0)
                integral_diff += 0.5 * (std::fabs(eta1[j - 1] - eta2[j - 1]) +
                                        std::fabs(eta1[j] - eta2[j])) * dt;
            const double numer = std::fabs(g1[j] - g2[j]);
            const double denom =
                f.lipschitz_K * (std::fabs(eta1[j] - eta2[j]) + integral_diff);
            if (denom > 1e-300) {
                worst = std::max(worst, numer / denom);
            } else if (numer > 1e-12) {
                worst = std::numeric_limits<double>::infinity();
            }
        }
    }
    report.worst_ratio = worst;
    report.sup_at_zero = transported_sup_on_zero_path(f, map, t_horizon,
                                                      pairs.front().first.size() - 1);
    report.pass = worst <= 1.0 + 1e-9 && std::isfinite(report.sup_at_zero);
    report.details = "lipschitz ratio over " + std::to_string(pairs.size()) + " pairs";
    return report;
}

}  // namespace distdrift
