// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "distdrift/coefficients.hpp"
#include "distdrift/errors.hpp"
#include "distdrift/grid.hpp"
#include "distdrift/quadrature.hpp"

namespace distdrift {

// ---------------------------------------------------------------------------
// HarmonicMap: the increasing C1-diffeomorphism h with h(0) = 0 and
// h' = e^{-Sigma}, its inverse, and the transformed diffusion coefficient
// sigma0 = (sigma * h') o h^{-1} tabulated on the image grid.
// ---------------------------------------------------------------------------
class HarmonicMap {
public:
    HarmonicMap() = default;

    const UniformGrid& grid() const { return grid_; }
    std::span<const double> h_values() const { return h_; }
    std::span<const double> hprime_values() const { return hprime_; }
    double image_min() const { return h_.front(); }
    double image_max() const { return h_.back(); }

    double h(double x) const {
        if (!grid_.contains(x)) throw OutOfRange("h queried outside the grid");
        return h_interp_(x);
    }

    // h' = e^{-Sigma}; evaluated through the potential so it is positive by
    // construction even between nodes.
    double h_prime(double x) const {
        if (!grid_.contains(x)) throw OutOfRange("h' queried outside the grid");
        return std::exp(-sigma_interp_(x));
    }

    double h_inverse(double y) const {
        std::size_t hint = h_.size() / 2;
        return h_inverse(y, hint);
    }

    // Newton on the forward interpolant inside the bracketing cell, with
    // bisection fallback; the hint carries the cell between nearby queries.
    double h_inverse(double y, std::size_t& hint) const {
        if (y < h_.front() || y > h_.back())
            throw OutOfRange("value outside the image of h");
        std::size_t c = locate_image_cell(y, hint);
        hint = c;
        double lo = grid_.node(c), hi = grid_.node(c + 1);
        double x = lo + (hi - lo) * (y - h_[c]) / (h_[c + 1] - h_[c]);
        const double tol = 1e-14 * (1.0 + std::fabs(y));
        for (int iter = 0; iter < 60; ++iter) {
            const double f = h_interp_.value_in_cell(c, x) - y;
            if (std::fabs(f) <= tol) return x;
            if (f > 0.0) hi = x; else lo = x;
            const double df = h_interp_.derivative_in_cell(c, x);
            double next = x - f / df;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::fabs(next - x) < 1e-16 * (1.0 + std::fabs(x))) return next;
            x = next;
        }
        return x;
    }

    double sigma0(double y) const {
        if (y < h_.front() || y > h_.back())
            throw OutOfRange("sigma0 queried outside the image of h");
        return sigma0_interp_(y);
    }

    double sigma0(double y, std::size_t& hint) const {
        if (y < h_.front() || y > h_.back())
            throw OutOfRange("sigma0 queried outside the image of h");
        hint = sigma0_interp_.locate(y, hint);
        return sigma0_interp_.value_in_cell(hint, y);
    }

    double sigma0_sup() const { return sigma0_sup_; }

    double sigma_potential(double x) const { return sigma_interp_(x); }
    double sigma(double x) const { return sigma_fn_(x); }

    friend HarmonicMap build_h(const SigmaTable&, const CoefficientSet&);

private:
    std::size_t locate_image_cell(double y, std::size_t hint) const {
        const std::size_t last = h_.size() - 2;
        std::size_t c = std::min(hint, last);
        if (y >= h_[c] && y <= h_[c + 1]) return c;
        if (c > 0 && y >= h_[c - 1] && y < h_[c]) return c - 1;
        if (c < last && y > h_[c + 1] && y <= h_[c + 2]) return c + 1;
        const auto it = std::upper_bound(h_.begin(), h_.end(), y);
        if (it == h_.begin()) return 0;
        return std::min(static_cast<std::size_t>(it - h_.begin()) - 1, last);
    }

    UniformGrid grid_;
    std::vector<double> h_, hprime_;
    HermiteTable h_interp_;        // monotone
    HermiteTable sigma_interp_;    // drift potential
    HermiteTable sigma0_interp_;   // on image nodes h(x_i)
    std::function<double(double)> sigma_fn_;
    double sigma0_sup_ = 0.0;
};

// Integrates e^{-Sigma} along the grid (Simpson per cell, midpoints from the
// potential interpolant) and assembles the map with its inverse and the
// transformed coefficient.
inline HarmonicMap build_h(const SigmaTable& table, const CoefficientSet& coeffs) {
    const UniformGrid& grid = table.grid;
    HarmonicMap map;
    map.grid_ = grid;
    map.sigma_interp_ = table.interp;
    map.sigma_fn_ = coeffs.sigma;

    const auto integrand = [&](double x) { return std::exp(-table.interp(x)); };
    auto cumulative = cumulative_simpson(integrand, grid, grid.zero_index());
    map.h_ = std::move(cumulative.values);

    map.hprime_.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        map.hprime_[i] = std::exp(-table.values[i]);

    for (std::size_t i = 1; i < map.h_.size(); ++i)
        if (!(map.h_[i] > map.h_[i - 1]))
            throw NonMonotone("harmonic map is not strictly increasing at node " +
                              std::to_string(i));

    std::vector<double> slopes = map.hprime_;
    limit_slopes_monotone(grid.nodes(), map.h_, slopes);
    map.h_interp_ = HermiteTable(grid.nodes(), map.h_, std::move(slopes));

    // sigma0 is tabulated on a refined image grid (exact composition through
    // the map at the sub-nodes) so the cached interpolant tracks
    // (sigma * h') o h^{-1} to ~1e-9 between the original nodes too.
    constexpr std::size_t refine = 4;
    std::vector<double> ys, s0s;
    ys.reserve(refine * (grid.size() - 1) + 1);
    s0s.reserve(ys.capacity());
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        for (std::size_t j = 0; j < refine; ++j) {
            const double x = grid.node(i) + static_cast<double>(j) * grid.spacing() /
                                                static_cast<double>(refine);
            const double y = j == 0 ? map.h_[i] : map.h_interp_.value_in_cell(i, x);
            ys.push_back(y);
            s0s.push_back(coeffs.sigma(x) * std::exp(-table.interp(x)));
        }
    }
    ys.push_back(map.h_.back());
    s0s.push_back(coeffs.sigma(grid.node(grid.size() - 1)) * map.hprime_.back());
    for (const double v : s0s) map.sigma0_sup_ = std::max(map.sigma0_sup_, v);
    map.sigma0_interp_ = HermiteTable::with_fd_slopes(std::move(ys), std::move(s0s));
    return map;
}

// ---------------------------------------------------------------------------
// Generator domain membership, represented constructively: f belongs to the
// domain iff f' = e^{-Sigma} * phi for a C1 function phi. Carrying phi makes
// membership decidable and gives the operator in closed form.
//
// The factory-built closures hold references to the HarmonicMap that produced
// them; the map must outlive the DomainFunction.
// ---------------------------------------------------------------------------
struct DomainFunction {
    std::function<double(double)> phi;
    std::function<double(double)> phi_prime;
    std::function<double(double)> value;       // f itself
    std::function<double(double)> derivative;  // f' = e^{-Sigma} * phi
    std::string description;
};

// f = h: phi == 1.
inline DomainFunction harmonic_function(const HarmonicMap& map) {
    DomainFunction f;
    f.phi = [](double) { return 1.0; };
    f.phi_prime = [](double) { return 0.0; };
    f.value = [&map](double x) { return map.h(x); };
    f.derivative = [&map](double x) { return map.h_prime(x); };
    f.description = "h";
    return f;
}

inline DomainFunction constant_function(double c) {
    DomainFunction f;
    f.phi = [](double) { return 0.0; };
    f.phi_prime = [](double) { return 0.0; };
    f.value = [c](double) { return c; };
    f.derivative = [](double) { return 0.0; };
    f.description = "constant " + std::to_string(c);
    return f;
}

// General member from its phi representation; the value table is recovered by
// quadrature of e^{-Sigma} * phi anchored at f(0) = f0.
inline DomainFunction domain_function_from_phi(std::function<double(double)> phi,
                                               std::function<double(double)> phi_prime,
                                               const HarmonicMap& map, double f0,
                                               std::string description) {
    const UniformGrid& grid = map.grid();
    auto phi_copy = phi;
    const auto integrand = [&map, phi_copy](double x) {
        return std::exp(-map.sigma_potential(x)) * phi_copy(x);
    };
    auto cumulative = cumulative_simpson(integrand, grid, grid.zero_index());
    std::vector<double> vals = std::move(cumulative.values);
    std::vector<double> slopes(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        vals[i] += f0;
        slopes[i] = integrand(grid.node(i));
    }
    auto tableptr = std::make_shared<HermiteTable>(grid.nodes(), std::move(vals),
                                                   std::move(slopes));
    DomainFunction f;
    f.phi = std::move(phi);
    f.phi_prime = std::move(phi_prime);
    f.value = [tableptr](double x) { return (*tableptr)(x); };
    f.derivative = [&map, phi_copy](double x) {
        return std::exp(-map.sigma_potential(x)) * phi_copy(x);
    };
    f.description = std::move(description);
    return f;
}

// L f (x) = phi'(x) e^{-Sigma(x)} sigma^2(x) / 2
inline double apply_L(const DomainFunction& f, const HarmonicMap& map,
                      const CoefficientSet& coeffs, double x) {
    if (!map.grid().contains(x)) throw OutOfRange("apply_L outside the grid");
    const double s = coeffs.sigma(x);
    return 0.5 * f.phi_prime(x) * std::exp(-map.sigma_potential(x)) * s * s;
}

// f^2 stays in the domain with phi_2 = 2 f phi; the product rule gives
// L f^2 = sigma^2 f'^2 + 2 f L f pointwise.
inline DomainFunction square_in_domain(const DomainFunction& f, double f0) {
    if (!f.value) throw std::invalid_argument("square_in_domain needs a materialized value");
    if (std::fabs(f.value(0.0) - f0) > 1e-9 * (1.0 + std::fabs(f0)))
        throw std::invalid_argument("f0 disagrees with the function value at 0");
    DomainFunction sq;
    sq.phi = [f](double x) { return 2.0 * f.value(x) * f.phi(x); };
    sq.phi_prime = [f](double x) {
        return 2.0 * (f.derivative(x) * f.phi(x) + f.value(x) * f.phi_prime(x));
    };
    sq.value = [f](double x) { const double v = f.value(x); return v * v; };
    sq.derivative = [f](double x) { return 2.0 * f.value(x) * f.derivative(x); };
    sq.description = "(" + f.description + ")^2";
    return sq;
}

// Evaluates the transformed generator at y through the image-side route
// 0.5 * sigma0(y)^2 * (f o h^{-1})''(y), using the cached sigma0 interpolant
// and the inverse solve, then cross-checks against the direct route at
// x = h^{-1}(y). The two must agree up to interpolation error.
inline double transfer_operator(const DomainFunction& f, const HarmonicMap& map, double y,
                                double tolerance = 1e-6) {
    const double x = map.h_inverse(y);  // throws OutOfRange when y leaves the image
    const double s0 = map.sigma0(y);
    const double hp = map.h_prime(x);
    // (f o h^{-1})'(y) = phi(x) so the second derivative is phi'(x) / h'(x)
    const double image_route = 0.5 * s0 * s0 * f.phi_prime(x) / hp;
    const double sigma_x = map.sigma(x);
    const double direct_route = 0.5 * f.phi_prime(x) * hp * sigma_x * sigma_x;
    if (std::fabs(image_route - direct_route) > tolerance * (1.0 + std::fabs(direct_route)))
        throw NumericalInconsistency(
            "transfer operator routes disagree: " + std::to_string(image_route) + " vs " +
            std::to_string(direct_route) + " at y=" + std::to_string(y));
    return image_route;
}

}  // namespace distdrift
