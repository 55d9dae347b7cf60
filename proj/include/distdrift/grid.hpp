// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "distdrift/errors.hpp"

namespace distdrift {

// Uniform spatial grid anchored so that x = 0 is exactly a node.
class UniformGrid {
public:
    UniformGrid() = default;

    // Builds the grid covering [x_min, x_max] with spacing dx. The bounds are
    // snapped to integer multiples of dx so the node set contains 0 exactly.
    UniformGrid(double x_min, double x_max, double dx) {
        if (!(dx > 0.0)) throw std::invalid_argument("grid spacing must be positive");
        if (!(x_min < 0.0 && x_max > 0.0))
            throw std::invalid_argument("grid must straddle 0");
        dx_ = dx;
        left_count_ = static_cast<std::size_t>(std::ceil(-x_min / dx - 1e-9));
        const auto right = static_cast<std::size_t>(std::ceil(x_max / dx - 1e-9));
        n_ = left_count_ + right + 1;
        if (n_ < 3) throw std::invalid_argument("grid needs at least 3 nodes");
    }

    std::size_t size() const { return n_; }
    double spacing() const { return dx_; }
    std::size_t zero_index() const { return left_count_; }

    double node(std::size_t i) const {
        return (static_cast<double>(i) - static_cast<double>(left_count_)) * dx_;
    }
    double x_min() const { return node(0); }
    double x_max() const { return node(n_ - 1); }

    bool contains(double x) const { return x >= x_min() && x <= x_max(); }

    std::vector<double> nodes() const {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = node(i);
        return out;
    }

private:
    double dx_ = 0.0;
    std::size_t left_count_ = 0;
    std::size_t n_ = 0;
};

// Piecewise cubic Hermite interpolant on a strictly increasing abscissa set.
// Stateless lookups; callers in hot loops pass their own cell hint.
class HermiteTable {
public:
    HermiteTable() = default;

    HermiteTable(std::vector<double> x, std::vector<double> y, std::vector<double> slope)
        : x_(std::move(x)), y_(std::move(y)), d_(std::move(slope)) {
        if (x_.size() < 2 || x_.size() != y_.size() || x_.size() != d_.size())
            throw std::invalid_argument("HermiteTable: inconsistent table sizes");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1]))
                throw std::invalid_argument("HermiteTable: abscissae not increasing");
    }

    // Three-point finite-difference slopes (second order, one-sided at ends).
    static HermiteTable with_fd_slopes(std::vector<double> x, std::vector<double> y) {
        const std::size_t n = x.size();
        if (n < 3) throw std::invalid_argument("with_fd_slopes: need at least 3 points");
        std::vector<double> d(n);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = x[i] - x[i - 1], hr = x[i + 1] - x[i];
            d[i] = (hl * hl * (y[i + 1] - y[i]) + hr * hr * (y[i] - y[i - 1])) /
                   (hl * hr * (hl + hr));
        }
        {
            const double h0 = x[1] - x[0], h1 = x[2] - x[1];
            d[0] = ((2.0 * h0 + h1) * (y[1] - y[0]) / h0 - h0 * (y[2] - y[1]) / h1) /
                   (h0 + h1);
            const double hm = x[n - 1] - x[n - 2], hp = x[n - 2] - x[n - 3];
            d[n - 1] = ((2.0 * hm + hp) * (y[n - 1] - y[n - 2]) / hm -
                        hm * (y[n - 2] - y[n - 3]) / hp) /
                       (hm + hp);
        }
        return HermiteTable(std::move(x), std::move(y), std::move(d));
    }

    std::size_t size() const { return x_.size(); }
    double front_x() const { return x_.front(); }
    double back_x() const { return x_.back(); }
    std::span<const double> abscissae() const { return x_; }
    std::span<const double> ordinates() const { return y_; }
    std::span<const double> slopes() const { return d_; }

    std::size_t locate(double x) const {
        if (x <= x_.front()) return 0;
        if (x >= x_[x_.size() - 2]) return x_.size() - 2;
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        return static_cast<std::size_t>(it - x_.begin()) - 1;
    }

    // Reuses hint when the query stays in or near the same cell.
    std::size_t locate(double x, std::size_t hint) const {
        const std::size_t last = x_.size() - 2;
        std::size_t c = std::min(hint, last);
        if (x >= x_[c] && x <= x_[c + 1]) return c;
        if (c > 0 && x >= x_[c - 1] && x < x_[c]) return c - 1;
        if (c < last && x > x_[c + 1] && x <= x_[c + 2]) return c + 1;
        return locate(x);
    }

    double value_in_cell(std::size_t c, double x) const {
        const double h = x_[c + 1] - x_[c];
        const double t = (x - x_[c]) / h;
        const double t2 = t * t, t3 = t2 * t;
        return y_[c] * (2.0 * t3 - 3.0 * t2 + 1.0) + y_[c + 1] * (3.0 * t2 - 2.0 * t3) +
               h * (d_[c] * (t3 - 2.0 * t2 + t) + d_[c + 1] * (t3 - t2));
    }

    double derivative_in_cell(std::size_t c, double x) const {
        const double h = x_[c + 1] - x_[c];
        const double t = (x - x_[c]) / h;
        const double t2 = t * t;
        return (y_[c] * (6.0 * t2 - 6.0 * t) + y_[c + 1] * (6.0 * t - 6.0 * t2)) / h +
               d_[c] * (3.0 * t2 - 4.0 * t + 1.0) + d_[c + 1] * (3.0 * t2 - 2.0 * t);
    }

    double operator()(double x) const { return value_in_cell(locate(x), x); }
    double derivative(double x) const { return derivative_in_cell(locate(x), x); }

    double operator()(double x, std::size_t& hint) const {
        hint = locate(x, hint);
        return value_in_cell(hint, x);
    }

private:
    std::vector<double> x_, y_, d_;
};

// Fritsch-Carlson slope limiting: clamps node slopes so the cubic Hermite
// interpolant of strictly increasing data is itself strictly increasing.
inline void limit_slopes_monotone(std::span<const double> x, std::span<const double> y,
                                  std::vector<double>& d) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double s = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
        if (!(s > 0.0)) throw NonMonotone("node values are not strictly increasing");
        const double a = d[i] / s, b = d[i + 1] / s;
        if (a < 0.0) d[i] = 0.0;
        if (b < 0.0) d[i + 1] = 0.0;
        const double r = a * a + b * b;
        if (r > 9.0) {
            const double f = 3.0 / std::sqrt(r);
            d[i] = f * a * s;
            d[i + 1] = f * b * s;
        }
    }
}

}  // namespace distdrift
