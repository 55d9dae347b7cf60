// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "distdrift/coefficients.hpp"
#include "distdrift/harmonic.hpp"
#include "distdrift/simulate.hpp"
#include "distdrift/verify.hpp"

namespace distdrift {

// Minimal deterministic SVG line-chart writer: fixed layout, fixed number
// formatting, no timestamps, so identical inputs give identical bytes.
class SvgChart {
public:
    SvgChart(std::string title, double w = 640.0, double h = 420.0)
        : title_(std::move(title)), width_(w), height_(h) {}

    void add_series(std::string label, std::vector<double> x, std::vector<double> y,
                    std::string color) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x_min_ = std::min(x_min_, x[i]);
            x_max_ = std::max(x_max_, x[i]);
            y_min_ = std::min(y_min_, y[i]);
            y_max_ = std::max(y_max_, y[i]);
        }
        series_.push_back({std::move(label), std::move(x), std::move(y), std::move(color)});
    }

    bool empty() const { return series_.empty(); }

    std::string render() const {
        const double ml = 56.0, mr = 16.0, mt = 34.0, mb = 34.0;
        const double pw = width_ - ml - mr, ph = height_ - mt - mb;
        const double xr = x_max_ > x_min_ ? x_max_ - x_min_ : 1.0;
        const double yr = y_max_ > y_min_ ? y_max_ - y_min_ : 1.0;
        const auto px = [&](double x) { return ml + (x - x_min_) / xr * pw; };
        const auto py = [&](double y) { return mt + ph - (y - y_min_) / yr * ph; };

        std::string out;
        out += fmt("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%g\" height=\"%g\" "
                   "viewBox=\"0 0 %g %g\">\n",
                   width_, height_, width_, height_);
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += fmt("<text x=\"%g\" y=\"20\" font-family=\"monospace\" font-size=\"14\">%s"
                   "</text>\n",
                   ml, title_.c_str());
        out += fmt("<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" "
                   "stroke=\"#888\"/>\n",
                   ml, mt, pw, ph);
        for (int t = 0; t <= 4; ++t) {
            const double fx = x_min_ + xr * t / 4.0, fy = y_min_ + yr * t / 4.0;
            out += fmt("<text x=\"%g\" y=\"%g\" font-family=\"monospace\" font-size=\"10\" "
                       "text-anchor=\"middle\">%.4g</text>\n",
                       px(fx), height_ - 14.0, fx);
            out += fmt("<text x=\"%g\" y=\"%g\" font-family=\"monospace\" font-size=\"10\" "
                       "text-anchor=\"end\">%.4g</text>\n",
                       ml - 6.0, py(fy) + 3.0, fy);
        }
        std::size_t legend = 0;
        for (const auto& s : series_) {
            // long series are decimated; the points list must not pass through
            // a fixed-size format buffer
            const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 1024);
            std::string pts;
            pts.reserve(24 * (s.x.size() / stride + 2));
            for (std::size_t i = 0; i < s.x.size(); i += stride)
                pts += fmt("%.6g,%.6g ", px(s.x[i]), py(s.y[i]));
            if ((s.x.size() - 1) % stride != 0)
                pts += fmt("%.6g,%.6g ", px(s.x.back()), py(s.y.back()));
            out += "<polyline fill=\"none\" stroke=\"" + s.color +
                   "\" stroke-width=\"1.2\" points=\"" + pts + "\"/>\n";
            if (!s.label.empty() && legend < 6) {
                out += fmt("<text x=\"%g\" y=\"%g\" font-family=\"monospace\" "
                           "font-size=\"11\" fill=\"%s\">%s</text>\n",
                           ml + 8.0, mt + 14.0 + 13.0 * static_cast<double>(legend),
                           s.color.c_str(), s.label.c_str());
                ++legend;
            }
        }
        out += "</svg>\n";
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path);
        f << render();
    }

private:
    struct Series {
        std::string label;
        std::vector<double> x, y;
        std::string color;
    };

    static std::string fmt(const char* spec, ...) {
        char buf[4096];
        va_list ap;
        va_start(ap, spec);
        std::vsnprintf(buf, sizeof buf, spec, ap);
        va_end(ap);
        return buf;
    }

    std::string title_;
    double width_, height_;
    double x_min_ = 1e300, x_max_ = -1e300, y_min_ = 1e300, y_max_ = -1e300;
    std::vector<Series> series_;
};

inline void plot_transform_curves(const std::string& path, const SigmaTable& table,
                                  const HarmonicMap& map) {
    SvgChart chart("harmonic map and transformed coefficient");
    const auto xs = table.grid.nodes();
    std::vector<double> hs(xs.size()), s0(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        hs[i] = map.h_values()[i];
        s0[i] = map.sigma0(map.h_values()[i]);
    }
    chart.add_series("h(x)", xs, hs, "#1f77b4");
    chart.add_series("sigma0(h(x))", xs, s0, "#d62728");
    chart.write(path);
}

inline void plot_sample_paths(const std::string& path, const PathEnsemble& e,
                              std::size_t max_paths = 20) {
    if (e.n_paths == 0) throw Error("empty ensemble: nothing to plot");
    SvgChart chart("sample paths of X");
    static const char* palette[5] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"};
    const std::size_t count = std::min(max_paths, e.n_paths);
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = e.x_path(i);
        chart.add_series(i == 0 ? "X_t" : "", e.times,
                         std::vector<double>(x.begin(), x.end()), palette[i % 5]);
    }
    chart.write(path);
}

inline void plot_qv_refinement(const std::string& path, const VerificationReport& report) {
    if (report.rows.empty()) throw Error("empty report: nothing to plot");
    SvgChart chart("realized quadratic variation: mean relative error per level");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        lx.push_back(static_cast<double>(i));
        ly.push_back(std::log10(std::max(report.rows[i].statistic, 1e-12)));
    }
    chart.add_series("log10 error vs dyadic level", lx, ly, "#1f77b4");
    chart.write(path);
}

// Weighted step-outline histograms of the terminal marginal, one per ensemble.
inline void plot_marginal_histograms(const std::string& path, const PathEnsemble& e1,
                                     const PathEnsemble* e2 = nullptr,
                                     std::size_t n_bins = 40) {
    if (e1.n_paths == 0 || (e2 != nullptr && e2->n_paths == 0))
        throw Error("empty ensemble: nothing to plot");
    double lo = 1e300, hi = -1e300;
    const auto scan = [&](const PathEnsemble& e) {
        for (std::size_t i = 0; i < e.n_paths; ++i) {
            lo = std::min(lo, e.x_terminal(i));
            hi = std::max(hi, e.x_terminal(i));
        }
    };
    scan(e1);
    if (e2 != nullptr) scan(*e2);
    if (!(hi > lo)) hi = lo + 1.0;

    const auto histogram = [&](const PathEnsemble& e) {
        std::vector<double> mass(n_bins, 0.0);
        double total = 0.0;
        for (std::size_t i = 0; i < e.n_paths; ++i) {
            auto b = static_cast<std::size_t>((e.x_terminal(i) - lo) / (hi - lo) *
                                              static_cast<double>(n_bins));
            if (b >= n_bins) b = n_bins - 1;
            mass[b] += e.weights[i];
            total += e.weights[i];
        }
        std::vector<double> xs, ys;
        for (std::size_t b = 0; b < n_bins; ++b) {
            const double x0 = lo + (hi - lo) * static_cast<double>(b) / n_bins;
            const double x1 = lo + (hi - lo) * static_cast<double>(b + 1) / n_bins;
            const double d = mass[b] / total / ((hi - lo) / n_bins);
            xs.push_back(x0);
            ys.push_back(d);
            xs.push_back(x1);
            ys.push_back(d);
        }
        return std::pair{xs, ys};
    };

    SvgChart chart("terminal marginal density");
    auto [x1, y1] = histogram(e1);
    chart.add_series(std::string(to_string(e1.scheme)), x1, y1, "#1f77b4");
    if (e2 != nullptr) {
        auto [x2, y2] = histogram(*e2);
        chart.add_series(std::string(to_string(e2->scheme)), x2, y2, "#d62728");
    }
    chart.write(path);
}

}  // namespace distdrift
