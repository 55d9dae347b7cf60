// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one criterion per section, each printing a pass/fail line
// with its headline numbers. Exit code 0 only if every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "distdrift/runner.hpp"
#include "distdrift/scenario.hpp"
#include "distdrift/stats.hpp"
#include "distdrift/verify.hpp"

using namespace distdrift;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

Scenario load(const char* name) {
    return load_scenario(fs::path(DISTDRIFT_SCENARIO_DIR) / (std::string(name) + ".json"));
}

constexpr std::uint64_t kEngineSalt = 0x9e3779b97f4a7c15ull;

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) {
        detail += (detail.empty() ? "" : "; ") + what;
    }
};

// --------------------------------------------------------------------------
// 1. Transform calculus on the sine-drift model
// --------------------------------------------------------------------------
Check criterion_transform_calculus() {
    Check c;
    const auto t0 = clock_type::now();
    const auto s = load("sin_drift");
    const auto artifacts = build_artifacts(s);
    const auto& map = artifacts.map;

    const auto h = harmonic_function(map);
    double worst_lh = 0.0, worst_rt = 0.0;
    for (std::size_t i = 0; i < map.grid().size(); ++i) {
        const double x = map.grid().node(i);
        worst_lh = std::max(worst_lh, std::fabs(apply_L(h, map, artifacts.coeffs, x)));
        worst_rt = std::max(worst_rt, std::fabs(map.h_inverse(map.h(x)) - x));
    }
    const NormalStream stream(1, 0);
    for (std::uint32_t k = 0; k < 200; ++k) {
        const double x = -8.0 + 16.0 * stream.uniform(0, k);
        worst_rt = std::max(worst_rt, std::fabs(map.h_inverse(map.h(x)) - x));
    }

    const auto f = domain_function_from_phi([](double x) { return x; },
                                            [](double) { return 1.0; }, map, 0.0, "x-phi");
    const auto h2 = square_in_domain(h, 0.0);
    double worst_route = 0.0;
    for (std::uint32_t k = 0; k < 100; ++k) {
        const double y =
            map.image_min() + (map.image_max() - map.image_min()) * stream.uniform(1, k);
        for (const auto* fn : {&f, &h2}) {
            const double via_image = transfer_operator(*fn, map, y);
            const double direct = apply_L(*fn, map, artifacts.coeffs, map.h_inverse(y));
            worst_route = std::max(worst_route, std::fabs(via_image - direct) /
                                                    (1.0 + std::fabs(direct)));
        }
    }
    const double elapsed = seconds_since(t0);

    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "max|Lh|=%.2e, max roundtrip=%.2e, route diff=%.2e, %.2f s", worst_lh,
                  worst_rt, worst_route, elapsed);
    c.note(buf);
    c.require(worst_lh <= 1e-9, "harmonicity above 1e-9");
    c.require(worst_rt <= 1e-8, "roundtrip above 1e-8");
    c.require(worst_route <= 1e-6, "route equivalence above 1e-6");
    c.require(elapsed < 1.0, "runtime above 1 s");
    return c;
}

// --------------------------------------------------------------------------
// 2. Degenerate model reduces to Brownian motion
// --------------------------------------------------------------------------
Check criterion_degenerate_reduction(const PathEnsemble& bm) {
    Check c;
    const double n = static_cast<double>(bm.n_paths);
    double mean = 0.0;
    std::vector<double> terminal(bm.n_paths);
    for (std::size_t i = 0; i < bm.n_paths; ++i) {
        terminal[i] = bm.x_terminal(i);
        mean += terminal[i];
    }
    mean /= n;
    const double bound = 3.0 * std::sqrt(bm.t_horizon / n);
    const auto ks = weighted_ks_vs_cdf(terminal, bm.weights, [&](double x) {
        return standard_normal_cdf((x - bm.x0) / std::sqrt(bm.t_horizon));
    });

    char buf[256];
    std::snprintf(buf, sizeof buf, "|mean|=%.4f (bound %.4f), KS p=%.3f",
                  std::fabs(mean - bm.x0), bound, ks.p_value);
    c.note(buf);
    c.require(std::fabs(mean - bm.x0) <= bound, "terminal mean outside 3 sigma");
    c.require(ks.p_value > 0.01, "KS against the normal law rejected");
    return c;
}

// --------------------------------------------------------------------------
// 3. Change-of-measure weights average to one
// --------------------------------------------------------------------------
Check criterion_weight_normalization(const std::vector<const PathEnsemble*>& weighted_runs,
                                     const std::vector<std::string>& labels) {
    Check c;
    for (std::size_t k = 0; k < weighted_runs.size(); ++k) {
        const auto& e = *weighted_runs[k];
        const double mean = e.weight_sum() / static_cast<double>(e.n_paths);
        const double se = bootstrap_stderr_mean(e.weights, 500, e.seed + 17);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: mean w=%.4f +- %.4f", labels[k].c_str(), mean,
                      se);
        c.note(buf);
        c.require(std::fabs(mean - 1.0) <= 3.0 * se,
                  labels[k] + " weight mean off by more than 3 bootstrap se");
    }
    return c;
}

// --------------------------------------------------------------------------
// 4. Existence construction: engines agree in law
// --------------------------------------------------------------------------
Check criterion_cross_engine(const PathEnsemble& const_t, const PathEnsemble& const_w,
                             const PathEnsemble& brox_t, const PathEnsemble& brox_w,
                             double elapsed_runs) {
    Check c;
    const auto t0 = clock_type::now();

    const auto law_a = test_law_equivalence(const_t, const_w, default_observables());
    c.require(law_a.pass(), "constant-drift engines disagree");
    for (const auto& row : law_a.rows) c.note("const " + row.name);

    // the constant-drift marginal has a closed form: N(x0 + T, T)
    const auto closed = [&](const PathEnsemble& e) {
        std::vector<double> terminal(e.n_paths);
        for (std::size_t i = 0; i < e.n_paths; ++i) terminal[i] = e.x_terminal(i);
        return weighted_ks_vs_cdf(terminal, e.weights, [&](double x) {
            return standard_normal_cdf((x - (e.x0 + e.t_horizon)) /
                                       std::sqrt(e.t_horizon));
        });
    };
    const auto kt = closed(const_t), kw = closed(const_w);
    char buf[200];
    std::snprintf(buf, sizeof buf, "closed-form p: transformed=%.3f weighted=%.3f",
                  kt.p_value, kw.p_value);
    c.note(buf);
    c.require(kt.p_value > 0.01, "transformed engine rejects the closed-form law");
    c.require(kw.p_value > 0.01, "weighted engine rejects the closed-form law");

    const auto law_b = test_law_equivalence(brox_t, brox_w, default_observables());
    c.require(law_b.pass(), "random-environment engines disagree");
    for (const auto& row : law_b.rows) c.note("brox " + row.name);

    const double elapsed = elapsed_runs + seconds_since(t0);
    std::snprintf(buf, sizeof buf, "%.1f s total", elapsed);
    c.note(buf);
    c.require(elapsed < 120.0, "runtime above 2 minutes");
    return c;
}

// --------------------------------------------------------------------------
// 5. Martingale battery with a corrupted-drift negative control
// --------------------------------------------------------------------------
Check criterion_martingale_battery(
    const std::vector<std::tuple<const PathEnsemble*, const BuiltArtifacts*,
                                 const PathFunctional*, std::string>>& honest,
    const PathEnsemble& corrupted, const BuiltArtifacts& corrupted_artifacts,
    const PathFunctional& claimed_gamma) {
    Check c;
    for (const auto& [e, artifacts, gamma, label] : honest) {
        const auto spec = default_martingale_battery(artifacts->map, e->t_horizon);
        const auto report =
            test_martingale_property(*e, spec, artifacts->map, artifacts->coeffs, *gamma);
        double worst = 0.0;
        for (const auto& row : report.rows) worst = std::max(worst, std::fabs(row.z));
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s max|z|=%.2f", label.c_str(), worst);
        c.note(buf);
        c.require(report.pass(), label + " battery failed");
    }
    const auto spec =
        default_martingale_battery(corrupted_artifacts.map, corrupted.t_horizon);
    const auto negative = test_martingale_property(corrupted, spec, corrupted_artifacts.map,
                                                   corrupted_artifacts.coeffs, claimed_gamma);
    double worst = 0.0;
    for (const auto& row : negative.rows) worst = std::max(worst, std::fabs(row.z));
    char buf[160];
    std::snprintf(buf, sizeof buf, "negative control max|z|=%.1f", worst);
    c.note(buf);
    c.require(!negative.pass() && worst > 3.0, "corrupted drift was not detected");
    return c;
}

// --------------------------------------------------------------------------
// 6. Realized quadratic variation refinement
// --------------------------------------------------------------------------
Check criterion_quadratic_variation() {
    Check c;
    const auto s = load("qv_bm");
    const auto artifacts = build_artifacts(s);
    const auto e = simulate_transformed(s.sim_config(), artifacts.map, make_gamma(s));
    const auto report = test_quadratic_variation(e, artifacts.coeffs, 1024, 0.05);
    for (const auto& row : report.rows) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s = %.4f", row.name.c_str(), row.statistic);
        c.note(buf);
    }
    c.require(report.pass(), "error not below 5% and decreasing across levels");
    return c;
}

// --------------------------------------------------------------------------
// 7. Strong-convergence slope under shared-noise refinement
// --------------------------------------------------------------------------
Check criterion_refinement_slope() {
    Check c;
    const auto s = load("sin_drift_delay");
    const auto artifacts = build_artifacts(s);
    SimConfig cfg = s.sim_config();
    cfg.n_steps = 1024;
    cfg.n_paths = 100;
    const auto report =
        test_pathwise_uniqueness(cfg, artifacts.map, make_gamma(s), 3, 0.4);
    const double slope = report.rows.back().statistic;
    char buf[160];
    std::snprintf(buf, sizeof buf, "slope=%.3f over levels 1024..8192 on 100 streams",
                  slope);
    c.note(buf);
    c.require(report.flag == TestFlag::Pass, "refinement not graded PASS");
    c.require(slope >= 0.4, "slope below 0.4");
    return c;
}

// --------------------------------------------------------------------------
// 8. Exponential-moment partition arithmetic
// --------------------------------------------------------------------------
Check criterion_partition_planner() {
    Check c;
    const auto artifacts_for = [](double sigma_value) {
        Scenario s;
        s.drift.kind = "explicit_potential";
        s.drift.form = "zero";
        s.sigma.value = sigma_value;
        return build_artifacts(s);
    };
    SimConfig cfg;
    cfg.t_horizon = 1.0;
    cfg.n_steps = 64;
    cfg.n_paths = 1;

    const auto unit = artifacts_for(1.0);
    auto gamma = PathFunctional::zero();
    gamma.growth_K = 1.0;
    const auto plan1 = preflight_novikov(cfg, unit.map, gamma);
    c.require(plan1.n_intervals == 4, "case 1 interval count");
    bool exact1 = plan1.k_bound == 1.0;
    for (const double ci : plan1.c_values) exact1 = exact1 && ci == 0.375;
    c.require(exact1, "case 1 c values not exactly 0.375");

    gamma.growth_K = 0.0;
    const auto plan2 = preflight_novikov(cfg, unit.map, gamma);
    c.require(plan2.n_intervals == 1 && plan2.c_values[0] == 0.0,
              "case 2 single-interval plan");

    const auto wide = artifacts_for(1.5);
    gamma.growth_K = 2.0;
    const auto plan3 = preflight_novikov(cfg, wide.map, gamma);
    c.require(plan3.k_bound == 2.25, "case 3 k bound");
    c.require(plan3.n_intervals == 28, "case 3 interval count");
    bool exact3 = true;
    for (const double ci : plan3.c_values)
        exact3 = exact3 && ci == 1.5 * (1.0 / 28.0) * 2.0 * 2.0 * 2.25;
    c.require(exact3, "case 3 c values not bit-stable");

    char buf[160];
    std::snprintf(buf, sizeof buf, "n=(%zu,%zu,%zu), c=(%.3f,%.1f,%.5f)",
                  plan1.n_intervals, plan2.n_intervals, plan3.n_intervals,
                  plan1.c_values[0], plan2.c_values[0], plan3.c_values[0]);
    c.note(buf);
    return c;
}

}  // namespace

int main() {
    int failures = 0;
    const auto report = [&](int id, const char* name, const Check& c, double elapsed) {
        std::printf("[%s] criterion %d: %s — %s (%.2f s)\n", c.ok ? "PASS" : "FAIL", id,
                    name, c.detail.c_str(), elapsed);
        if (!c.ok) ++failures;
        std::fflush(stdout);
    };

    // shared simulation runs, reused across criteria
    const auto bm_scenario = load("bm_degenerate");
    const auto bm_artifacts = build_artifacts(bm_scenario);
    const auto bm_gamma = make_gamma(bm_scenario);
    const auto t_bm0 = clock_type::now();
    const auto bm = simulate_transformed(bm_scenario.sim_config(), bm_artifacts.map, bm_gamma);
    const double bm_run_seconds = seconds_since(t_bm0);

    const auto const_scenario = load("const_drift");
    const auto const_artifacts = build_artifacts(const_scenario);
    const auto const_gamma = make_gamma(const_scenario);
    const auto t_cross0 = clock_type::now();
    SimConfig const_cfg = const_scenario.sim_config();
    const auto const_t = simulate_transformed(const_cfg, const_artifacts.map, const_gamma);
    const_cfg.seed = const_scenario.seed ^ kEngineSalt;
    const auto const_w =
        simulate_weighted(const_cfg, const_artifacts.map, const_artifacts.coeffs, const_gamma);

    const auto brox_scenario = load("brox_delay");
    const auto brox_artifacts = build_artifacts(brox_scenario);
    const auto brox_gamma = make_gamma(brox_scenario);
    SimConfig brox_cfg = brox_scenario.sim_config();
    const auto brox_t = simulate_transformed(brox_cfg, brox_artifacts.map, brox_gamma);
    brox_cfg.seed = brox_scenario.seed ^ kEngineSalt;
    const auto brox_w =
        simulate_weighted(brox_cfg, brox_artifacts.map, brox_artifacts.coeffs, brox_gamma);
    const double cross_run_seconds = seconds_since(t_cross0);

    // corrupted-drift run for the negative control: simulated with twice the
    // functional, tested against the declared one
    const auto corrupted = simulate_transformed(const_scenario.sim_config(),
                                                const_artifacts.map, const_gamma.scaled(2.0));

    {
        const auto t0 = clock_type::now();
        const auto c = criterion_transform_calculus();
        report(1, "transform calculus (sine drift)", c, seconds_since(t0));
    }
    {
        const auto t0 = clock_type::now();
        auto c = criterion_degenerate_reduction(bm);
        char buf[96];
        std::snprintf(buf, sizeof buf, "simulation %.2f s", bm_run_seconds);
        c.note(buf);
        const double total = bm_run_seconds + seconds_since(t0);
        c.require(total < 10.0, "runtime above 10 s");
        report(2, "degenerate reduction to Brownian motion", c, total);
    }
    {
        const auto t0 = clock_type::now();
        const auto c = criterion_weight_normalization({&const_w, &brox_w},
                                                      {"const-drift", "brox-delay"});
        report(3, "Girsanov weight normalization", c, seconds_since(t0));
    }
    {
        const auto t0 = clock_type::now();
        const auto c =
            criterion_cross_engine(const_t, const_w, brox_t, brox_w, cross_run_seconds);
        report(4, "existence construction cross-check", c,
               cross_run_seconds + seconds_since(t0));
    }
    {
        const auto t0 = clock_type::now();
        const auto c = criterion_martingale_battery(
            {{&bm, &bm_artifacts, &bm_gamma, "bm/transformed"},
             {&const_t, &const_artifacts, &const_gamma, "const/transformed"},
             {&const_w, &const_artifacts, &const_gamma, "const/weighted"},
             {&brox_t, &brox_artifacts, &brox_gamma, "brox/transformed"},
             {&brox_w, &brox_artifacts, &brox_gamma, "brox/weighted"}},
            corrupted, const_artifacts, const_gamma);
        report(5, "martingale battery with negative control", c, seconds_since(t0));
    }
    {
        const auto t0 = clock_type::now();
        const auto c = criterion_quadratic_variation();
        report(6, "quadratic variation refinement", c, seconds_since(t0));
    }
    {
        const auto t0 = clock_type::now();
        const auto c = criterion_refinement_slope();
        report(7, "pathwise-uniqueness refinement slope", c, seconds_since(t0));
    }
    {
        const auto t0 = clock_type::now();
        const auto c = criterion_partition_planner();
        report(8, "partition planner arithmetic", c, seconds_since(t0));
    }

    if (failures == 0) {
        std::puts("acceptance: all criteria passed");
        return 0;
    }
    std::printf("acceptance: %d criteria failed\n", failures);
    return 1;
}
