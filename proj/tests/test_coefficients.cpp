// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "distdrift/coefficients.hpp"
#include "distdrift/rng.hpp"
#include "oracles.hpp"

using namespace distdrift;

namespace {

CoefficientSet unit_sigma_set(DriftSource drift, double eps, double dx = 0.01) {
    CoefficientSet c;
    c.sigma = [](double) { return 1.0; };
    c.drift = std::move(drift);
    c.mollifier_scale = eps;
    c.eval_grid = UniformGrid(-8.0, 8.0, dx);
    return c;
}

}  // namespace

TEST_CASE("zero drift gives an identically zero potential") {
    auto c = unit_sigma_set(SmoothDrift{[](double) { return 0.0; }, [](double) { return 0.0; }},
                            1e-3);
    const auto table = build_sigma_table(c);
    CHECK(table.convergence_gap == 0.0);
    for (std::size_t i = 0; i < table.grid.size(); ++i) CHECK(table.values[i] == 0.0);
}

TEST_CASE("potential is anchored to zero at the origin for every source") {
    auto smooth = unit_sigma_set(
        SmoothDrift{[](double x) { return 0.5 * std::sin(x); },
                    [](double x) { return 0.5 * std::cos(x); }},
        1e-3);
    CHECK(build_sigma_table(smooth).values[smooth.eval_grid.zero_index()] == 0.0);

    auto expl = unit_sigma_set(
        ExplicitSigmaPotential{[](double x) { return std::sin(x) + 3.0; }}, 1e-3);
    const auto t = build_sigma_table(expl);
    CHECK(t.values[expl.eval_grid.zero_index()] == 0.0);
    // the supplied offset at 0 is subtracted
    CHECK(t(1.0) == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
}

TEST_CASE("smooth sine drift reproduces the closed-form potential") {
    // with unit sigma and b = sin/2 the potential is 2(b(x) - b(0)) = sin(x)
    auto c = unit_sigma_set(
        SmoothDrift{[](double x) { return 0.5 * std::sin(x); },
                    [](double x) { return 0.5 * std::cos(x); }},
        1e-4);
    const auto table = build_sigma_table(c);
    for (std::size_t i = 0; i < table.grid.size(); i += 37)
        CHECK(table.values[i] ==
              doctest::Approx(std::sin(table.grid.node(i))).scale(1.0).epsilon(1e-8));
    CHECK(table(std::numbers::pi / 2) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(table.convergence_gap < 1e-6);
    // the closed form itself, confirmed by the quadrature oracle
    for (const double x : {-2.5, 1.3, 3.1}) {
        const double via_oracle =
            oracle::integrate([](double y) { return 2.0 * 0.5 * std::cos(y); }, 0.0, x, 1e-13);
        CHECK(via_oracle == doctest::Approx(std::sin(x)).scale(1.0).epsilon(1e-11));
    }
}

TEST_CASE("mollification error shrinks at first order or better in bandwidth") {
    const auto error_at = [](double eps) {
        auto c = unit_sigma_set(
            SmoothDrift{[](double x) { return 0.5 * std::sin(x); },
                        [](double x) { return 0.5 * std::cos(x); }},
            eps);
        SigmaBuildOptions opt;
        opt.convergence_threshold = 1.0;
        const auto table = build_sigma_table(c, opt);
        double worst = 0.0;
        for (std::size_t i = 0; i < table.grid.size(); ++i)
            worst = std::max(worst,
                             std::fabs(table.values[i] - std::sin(table.grid.node(i))));
        return worst;
    };
    const double e1 = error_at(0.04);
    const double e2 = error_at(0.02);
    CHECK(std::log2(e1 / e2) >= 1.0);  // observed order is ~2
}

TEST_CASE("mollification is linear in the drift") {
    const auto env = sample_brownian_environment(7, 8.6, 0.05);
    PiecewiseLinearDrift b1{env.x, {}}, b2{env.x, {}};
    b1.b.resize(env.value.size());
    b2.b.resize(env.value.size());
    for (std::size_t i = 0; i < env.value.size(); ++i) {
        b1.b[i] = -0.5 * env.value[i];
        b2.b[i] = -1.0 * env.value[i];
    }
    SigmaBuildOptions opt;
    opt.quadrature_tolerance = 1e-3;
    opt.convergence_threshold = 10.0;
    auto c1 = unit_sigma_set(b1, 0.05, 0.005);
    auto c2 = unit_sigma_set(b2, 0.05, 0.005);
    const auto t1 = build_sigma_table(c1, opt);
    const auto t2 = build_sigma_table(c2, opt);
    for (std::size_t i = 0; i < t1.values.size(); i += 61)
        CHECK(std::fabs(t2.values[i] - 2.0 * t1.values[i]) <= 1e-12);
}

TEST_CASE("random-environment potential matches the direct convolution oracle") {
    const double eps = 0.05;
    const auto env = sample_brownian_environment(7, 8.6, 0.05);
    PiecewiseLinearDrift drift{env.x, {}};
    drift.b.resize(env.value.size());
    for (std::size_t i = 0; i < env.value.size(); ++i) drift.b[i] = -0.5 * env.value[i];

    SigmaBuildOptions opt;
    opt.quadrature_tolerance = 1e-3;
    opt.convergence_threshold = 10.0;
    auto c = unit_sigma_set(drift, eps, 0.005);
    const auto table = build_sigma_table(c, opt);

    // with unit sigma: potential(x) = 2 (b_eps(x) - b_eps(0)) = -(B_eps(x) - B_eps(0))
    const double env_at_zero = oracle::mollify_sampled(env.x, env.value, eps, 0.0);
    for (const double x : {-3.1, -0.75, 0.5, 1.25, 4.4}) {
        const double expected = -(oracle::mollify_sampled(env.x, env.value, eps, x) - env_at_zero);
        CHECK(table(x) == doctest::Approx(expected).scale(1.0).epsilon(5e-4));
    }
    CHECK(table.convergence_gap > 0.0);
}

TEST_CASE("error paths") {
    SUBCASE("non-positive sigma") {
        CoefficientSet c;
        c.sigma = [](double x) { return x; };  // vanishes and changes sign on the grid
        c.drift = SmoothDrift{[](double) { return 0.0; }, [](double) { return 0.0; }};
        c.mollifier_scale = 1e-3;
        c.eval_grid = UniformGrid(-8.0, 8.0, 0.01);
        CHECK_THROWS_AS(build_sigma_table(c), NonPositiveSigma);
    }
    SUBCASE("grid too coarse for the requested quadrature tolerance") {
        auto c = unit_sigma_set(
            SmoothDrift{[](double x) { return 0.5 * std::sin(x); },
                        [](double x) { return 0.5 * std::cos(x); }},
            1e-3, 0.25);
        CHECK_THROWS_AS(build_sigma_table(c), GridTooCoarse);
    }
    SUBCASE("rough drift fails a tight convergence threshold") {
        const auto env = sample_brownian_environment(7, 8.6, 0.05);
        PiecewiseLinearDrift drift{env.x, {}};
        drift.b.resize(env.value.size());
        for (std::size_t i = 0; i < env.value.size(); ++i) drift.b[i] = -0.5 * env.value[i];
        auto c = unit_sigma_set(drift, 0.05, 0.005);
        SigmaBuildOptions opt;
        opt.quadrature_tolerance = 1e-3;
        opt.convergence_threshold = 1e-9;
        CHECK_THROWS_AS(build_sigma_table(c, opt), NotConverged);
    }
    SUBCASE("piecewise-linear sample must cover the padded grid") {
        PiecewiseLinearDrift drift{{-8.0, 8.0}, {0.0, 0.0}};  // no padding
        auto c = unit_sigma_set(drift, 0.05);
        CHECK_THROWS(build_sigma_table(c));
    }
}

TEST_CASE("non-explosion heuristic") {
    SUBCASE("flat potential passes with exact window integrals") {
        auto c = unit_sigma_set(ExplicitSigmaPotential{[](double) { return 0.0; }}, 1e-3);
        const auto table = build_sigma_table(c);
        const auto report = check_non_explosion(table);
        CHECK(report.right_integral == doctest::Approx(8.0).epsilon(1e-12));
        CHECK(report.left_integral == doctest::Approx(8.0).epsilon(1e-12));
        CHECK(report.overall == HeuristicFlag::PassHeuristic);
    }
    SUBCASE("bounded oscillating potential passes") {
        auto c = unit_sigma_set(ExplicitSigmaPotential{[](double x) { return std::sin(x); }},
                                1e-3);
        const auto report = check_non_explosion(build_sigma_table(c));
        // e^{-sin} >= 1/e gives a window lower bound
        CHECK(report.right_integral >= 8.0 / std::numbers::e);
        CHECK(report.left_integral >= 8.0 / std::numbers::e);
        CHECK(report.overall == HeuristicFlag::PassHeuristic);
    }
    SUBCASE("linear potential is inconclusive on the decaying side") {
        auto c = unit_sigma_set(ExplicitSigmaPotential{[](double x) { return x; }}, 1e-3);
        const auto report = check_non_explosion(build_sigma_table(c));
        const double expected = 1.0 - std::exp(-8.0);  // closed form
        CHECK(report.right_integral == doctest::Approx(expected).epsilon(1e-4));
        CHECK(report.right_integral < 1.0);
        CHECK(report.right_flag == HeuristicFlag::Inconclusive);
        CHECK(report.overall == HeuristicFlag::Inconclusive);
    }
}

TEST_CASE("coefficient validation") {
    CoefficientSet c;
    c.sigma = [](double) { return 1.0; };
    c.drift = SmoothDrift{[](double) { return 0.0; }, [](double) { return 0.0; }};
    c.eval_grid = UniformGrid(-2.0, 2.0, 0.01);
    SUBCASE("mollifier scale must be positive") {
        c.mollifier_scale = 0.0;
        CHECK_THROWS(c.validate());
    }
    SUBCASE("mollifier scale must be small next to the grid") {
        c.mollifier_scale = 1.0;  // >= (x_max - x_min) / 10
        CHECK_THROWS(c.validate());
    }
    SUBCASE("grid must straddle zero") {
        CHECK_THROWS(UniformGrid(1.0, 2.0, 0.01));
    }
}
