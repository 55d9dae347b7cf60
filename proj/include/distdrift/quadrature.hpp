// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "distdrift/grid.hpp"

namespace distdrift {

inline double simpson_cell(const std::function<double(double)>& f, double a, double b) {
    return (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
}

struct CumulativeIntegral {
    std::vector<double> values;   // antiderivative at the grid nodes, 0 at the anchor
    double error_estimate = 0.0;  // summed per-cell Richardson estimates
};

// Cumulative integral of `f` along the grid, anchored to zero at `anchor`.
// Each cell uses Simpson with one halving; the extrapolated value is kept and
// |S2 - S1| / 15 accumulates into the error estimate.
inline CumulativeIntegral cumulative_simpson(const std::function<double(double)>& f,
                                             const UniformGrid& grid,
                                             std::size_t anchor) {
    const std::size_t n = grid.size();
    std::vector<double> cell(n - 1);
    double err = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = grid.node(i), b = grid.node(i + 1);
        const double m = 0.5 * (a + b);
        const double s1 = simpson_cell(f, a, b);
        const double s2 = simpson_cell(f, a, m) + simpson_cell(f, m, b);
        cell[i] = s2 + (s2 - s1) / 15.0;
        err += std::fabs(s2 - s1) / 15.0;
    }
    CumulativeIntegral out;
    out.values.assign(n, 0.0);
    for (std::size_t i = anchor; i + 1 < n; ++i) out.values[i + 1] = out.values[i] + cell[i];
    for (std::size_t i = anchor; i > 0; --i) out.values[i - 1] = out.values[i] - cell[i - 1];
    out.error_estimate = err;
    return out;
}

// Trapezoid over tabulated node values between node indices [i0, i1].
inline double trapezoid_nodes(std::span<const double> values, double dx, std::size_t i0,
                              std::size_t i1) {
    double acc = 0.0;
    for (std::size_t i = i0; i < i1; ++i) acc += 0.5 * (values[i] + values[i + 1]) * dx;
    return acc;
}

}  // namespace distdrift
