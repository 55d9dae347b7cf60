// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "distdrift/errors.hpp"
#include "distdrift/grid.hpp"
#include "distdrift/quadrature.hpp"

namespace distdrift {

// ---------------------------------------------------------------------------
// Mollifier: the standard C-infinity bump exp(-1/(1-u^2)) on (-1,1), scaled to
// bandwidth eps and normalized to unit mass. Quadrature weights are normalized
// discretely so that mollifying a constant reproduces it exactly.
// ---------------------------------------------------------------------------
class BumpKernel {
public:
    explicit BumpKernel(double eps, std::size_t panels = 128) : eps_(eps) {
        if (!(eps > 0.0)) throw std::invalid_argument("mollifier bandwidth must be positive");
        const std::size_t n = 2 * panels + 1;  // Simpson nodes on [-1, 1]
        nodes_.resize(n);
        weights_.resize(n);
        const double du = 2.0 / static_cast<double>(n - 1);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = -1.0 + static_cast<double>(i) * du;
            double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            nodes_[i] = u * eps;
            weights_[i] = w * unit_bump(u);
            total += weights_[i];
        }
        for (auto& w : weights_) w /= total;  // sum of weights == 1
    }

    double bandwidth() const { return eps_; }

    static double unit_bump(double u) {
        const double w = 1.0 - u * u;
        return w > 1e-12 ? std::exp(-1.0 / w) : 0.0;
    }

    // (rho_eps * f)(y)
    double mollify(const std::function<double(double)>& f, double y) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes_.size(); ++i) acc += weights_[i] * f(y - nodes_[i]);
        return acc;
    }

    // CDF of the unit bump, tabulated once; slopes are the exact density.
    static const HermiteTable& unit_cdf() {
        static const HermiteTable table = [] {
            const std::size_t panels = 2048;
            const std::size_t n = 2 * panels + 1;
            std::vector<double> u(n), cdf(n), slope(n);
            const double du = 2.0 / static_cast<double>(n - 1);
            // normalize with the same high-resolution Simpson rule
            double mass = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double ui = -1.0 + static_cast<double>(i) * du;
                const double w = (i == 0 || i == n - 1) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
                mass += w * unit_bump(ui) * du / 3.0;
            }
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = -1.0 + static_cast<double>(i) * du;
                slope[i] = unit_bump(u[i]) / mass;
            }
            cdf[0] = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double m = 0.5 * (u[i] + u[i + 1]);
                cdf[i + 1] = cdf[i] + du / 6.0 * (slope[i] + 4.0 * unit_bump(m) / mass + slope[i + 1]);
            }
            const double scale = 1.0 / cdf[n - 1];
            for (auto& c : cdf) c *= scale;
            return HermiteTable(std::move(u), std::move(cdf), std::move(slope));
        }();
        return table;
    }

    // integral of rho_eps over (-inf, v]
    double cdf(double v) const {
        const double u = v / eps_;
        if (u <= -1.0) return 0.0;
        if (u >= 1.0) return 1.0;
        return unit_cdf()(u);
    }

private:
    double eps_;
    std::vector<double> nodes_, weights_;
};

// ---------------------------------------------------------------------------
// Drift sources
// ---------------------------------------------------------------------------

// The drift potential supplied directly (already integrated); anchored to 0 at x=0.
struct ExplicitSigmaPotential {
    std::function<double(double)> sigma_potential;
};

// Differentiable drift b with its derivative.
struct SmoothDrift {
    std::function<double(double)> b;
    std::function<double(double)> b_prime;
};

// Drift sampled on a grid and interpolated linearly; covers the
// random-environment case where b is a scaled two-sided Brownian sample.
struct PiecewiseLinearDrift {
    std::vector<double> x;  // strictly increasing
    std::vector<double> b;

    double min_x() const { return x.front(); }
    double max_x() const { return x.back(); }
};

using DriftSource = std::variant<ExplicitSigmaPotential, SmoothDrift, PiecewiseLinearDrift>;

struct CoefficientSet {
    std::function<double(double)> sigma;
    DriftSource drift;
    double mollifier_scale = 1e-3;
    UniformGrid eval_grid;

    void validate() const {
        if (!sigma) throw std::invalid_argument("sigma is not set");
        if (!(mollifier_scale > 0.0))
            throw std::invalid_argument("mollifier_scale must be positive");
        if (!(mollifier_scale < (eval_grid.x_max() - eval_grid.x_min()) / 10.0))
            throw std::invalid_argument("mollifier_scale too large for the grid");
        for (std::size_t i = 0; i < eval_grid.size(); ++i) {
            if (!(sigma(eval_grid.node(i)) > 0.0))
                throw NonPositiveSigma("sigma <= 0 at grid node x=" +
                                       std::to_string(eval_grid.node(i)));
        }
        if (const auto* pl = std::get_if<PiecewiseLinearDrift>(&drift)) {
            if (pl->x.size() < 2 || pl->x.size() != pl->b.size())
                throw std::invalid_argument("piecewise-linear drift table malformed");
            for (std::size_t i = 1; i < pl->x.size(); ++i)
                if (!(pl->x[i] > pl->x[i - 1]))
                    throw std::invalid_argument("piecewise-linear drift abscissae not increasing");
            const double pad = 3.0 * mollifier_scale;
            if (pl->min_x() > eval_grid.x_min() - pad || pl->max_x() < eval_grid.x_max() + pad)
                throw std::invalid_argument(
                    "piecewise-linear drift sample must cover the grid padded by 3*eps");
        }
    }
};

// ---------------------------------------------------------------------------
// Drift potential table
// ---------------------------------------------------------------------------

struct SigmaTable {
    UniformGrid grid;
    std::vector<double> values;   // anchored: values[grid.zero_index()] == 0
    double convergence_gap = 0.0;
    HermiteTable interp;

    double operator()(double x) const {
        if (!grid.contains(x)) throw OutOfRange("drift potential queried outside the grid");
        return interp(x);
    }

    double at_node(std::size_t i) const { return values[i]; }
};

struct SigmaBuildOptions {
    double quadrature_tolerance = 1e-7;    // total Richardson estimate cap
    double convergence_threshold = 1e-6;   // bandwidth-halving gap cap
    std::size_t kernel_panels = 128;
};

namespace detail {

// d/dy of the mollified piecewise-linear drift: the sample's slope field is
// piecewise constant, so the convolution reduces to kernel CDF differences,
// summed over the pieces that intersect the kernel support.
inline double mollified_slope(const PiecewiseLinearDrift& pl, const BumpKernel& kernel,
                              double y) {
    const double eps = kernel.bandwidth();
    const auto& xs = pl.x;
    auto lo = std::upper_bound(xs.begin(), xs.end(), y - eps);
    std::size_t i = lo == xs.begin() ? 0 : static_cast<std::size_t>(lo - xs.begin()) - 1;
    double acc = 0.0;
    for (; i + 1 < xs.size() && xs[i] < y + eps; ++i) {
        const double slope = (pl.b[i + 1] - pl.b[i]) / (xs[i + 1] - xs[i]);
        acc += slope * (kernel.cdf(y - xs[i]) - kernel.cdf(y - xs[i + 1]));
    }
    return acc;
}

}  // namespace detail

// Builds the drift potential 2 * int_0^x (mollified b)' / (mollified sigma)^2
// on the evaluation grid. The gap against a run at half bandwidth is kept as a
// convergence diagnostic; explicit potentials are evaluated directly.
inline SigmaTable build_sigma_table(const CoefficientSet& coeffs,
                                    const SigmaBuildOptions& options = {}) {
    coeffs.validate();
    const UniformGrid& grid = coeffs.eval_grid;

    SigmaTable table;
    table.grid = grid;

    if (const auto* ex = std::get_if<ExplicitSigmaPotential>(&coeffs.drift)) {
        const double at_zero = ex->sigma_potential(0.0);
        table.values.resize(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            table.values[i] = ex->sigma_potential(grid.node(i)) - at_zero;
            if (!std::isfinite(table.values[i]))
                throw NotConverged("explicit drift potential not finite on the grid");
        }
        table.values[grid.zero_index()] = 0.0;
        table.convergence_gap = 0.0;
        table.interp = HermiteTable::with_fd_slopes(grid.nodes(), table.values);
        return table;
    }

    const auto build_at = [&](double eps) -> std::pair<std::vector<double>, double> {
        const BumpKernel kernel(eps, options.kernel_panels);
        std::function<double(double)> integrand;
        if (const auto* sm = std::get_if<SmoothDrift>(&coeffs.drift)) {
            integrand = [&, sm](double y) {
                const double bp = kernel.mollify(sm->b_prime, y);
                const double sg = kernel.mollify(coeffs.sigma, y);
                if (!(sg > 0.0)) throw NonPositiveSigma("mollified sigma <= 0 near y=" +
                                                        std::to_string(y));
                return 2.0 * bp / (sg * sg);
            };
        } else {
            const auto* pl = std::get_if<PiecewiseLinearDrift>(&coeffs.drift);
            integrand = [&, pl](double y) {
                const double bp = detail::mollified_slope(*pl, kernel, y);
                const double sg = kernel.mollify(coeffs.sigma, y);
                if (!(sg > 0.0)) throw NonPositiveSigma("mollified sigma <= 0 near y=" +
                                                        std::to_string(y));
                return 2.0 * bp / (sg * sg);
            };
        }
        auto cumulative = cumulative_simpson(integrand, grid, grid.zero_index());
        return {std::move(cumulative.values), cumulative.error_estimate};
    };

    auto [values, err] = build_at(coeffs.mollifier_scale);
    if (err > options.quadrature_tolerance)
        throw GridTooCoarse("quadrature error estimate " + std::to_string(err) +
                            " exceeds tolerance");
    auto [values_half, err_half] = build_at(0.5 * coeffs.mollifier_scale);
    (void)err_half;

    double gap = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw NotConverged("drift potential not finite on grid");
        gap = std::max(gap, std::fabs(values[i] - values_half[i]));
    }
    if (gap > options.convergence_threshold)
        throw NotConverged("bandwidth-halving gap " + std::to_string(gap) +
                           " exceeds threshold " +
                           std::to_string(options.convergence_threshold));

    table.values = std::move(values);
    table.convergence_gap = gap;
    table.interp = HermiteTable::with_fd_slopes(grid.nodes(), table.values);
    return table;
}

// ---------------------------------------------------------------------------
// Non-explosion heuristic
// ---------------------------------------------------------------------------

enum class HeuristicFlag { PassHeuristic, Inconclusive };

inline const char* to_string(HeuristicFlag f) {
    return f == HeuristicFlag::PassHeuristic ? "PASS-heuristic" : "INCONCLUSIVE";
}

struct NonExplosionReport {
    double right_integral = 0.0;  // int_0^{x_max} e^{-Sigma}
    double left_integral = 0.0;   // int_{x_min}^0 e^{-Sigma}
    // mean of e^{-Sigma} over the nested windows [0,L], [L,2L], [2L,4L] per side
    std::array<double, 3> right_density{}, left_density{};
    HeuristicFlag right_flag = HeuristicFlag::Inconclusive;
    HeuristicFlag left_flag = HeuristicFlag::Inconclusive;
    HeuristicFlag overall = HeuristicFlag::Inconclusive;
};

// Finite-window divergence heuristic: over nested windows L, 2L, 4L the mean
// of e^{-Sigma} must not collapse relative to the innermost window. This can
// only ever be evidence, not a proof, of the improper-integral condition.
inline NonExplosionReport check_non_explosion(const SigmaTable& table,
                                              double density_floor = 0.2) {
    const UniformGrid& grid = table.grid;
    const std::size_t i0 = grid.zero_index();
    std::vector<double> integrand(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) integrand[i] = std::exp(-table.values[i]);

    NonExplosionReport report;
    const double dx = grid.spacing();
    report.right_integral = trapezoid_nodes(integrand, dx, i0, grid.size() - 1);
    report.left_integral = trapezoid_nodes(integrand, dx, 0, i0);

    const std::size_t right_nodes = grid.size() - 1 - i0;
    const std::size_t left_nodes = i0;
    const std::size_t quarter = std::min(right_nodes, left_nodes) / 4;
    if (quarter < 2) return report;  // window too small to grade

    const auto densities = [&](bool right) {
        std::array<double, 3> d{};
        const std::array<std::size_t, 4> marks{0, quarter, 2 * quarter, 4 * quarter};
        for (int w = 0; w < 3; ++w) {
            const double len = static_cast<double>(marks[w + 1] - marks[w]) * dx;
            double integral = 0.0;
            if (right) {
                integral = trapezoid_nodes(integrand, dx, i0 + marks[w], i0 + marks[w + 1]);
            } else {
                integral = trapezoid_nodes(integrand, dx, i0 - marks[w + 1], i0 - marks[w]);
            }
            d[static_cast<std::size_t>(w)] = integral / len;
        }
        return d;
    };
    report.right_density = densities(true);
    report.left_density = densities(false);

    const auto grade = [&](const std::array<double, 3>& d) {
        return (d[1] >= density_floor * d[0] && d[2] >= density_floor * d[0])
                   ? HeuristicFlag::PassHeuristic
                   : HeuristicFlag::Inconclusive;
    };
    report.right_flag = grade(report.right_density);
    report.left_flag = grade(report.left_density);
    report.overall = (report.right_flag == HeuristicFlag::PassHeuristic &&
                      report.left_flag == HeuristicFlag::PassHeuristic)
                         ? HeuristicFlag::PassHeuristic
                         : HeuristicFlag::Inconclusive;
    return report;
}

}  // namespace distdrift
