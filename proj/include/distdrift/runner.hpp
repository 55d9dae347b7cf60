// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "distdrift/artifacts_io.hpp"
#include "distdrift/plot.hpp"
#include "distdrift/scenario.hpp"
#include "distdrift/verify.hpp"

namespace distdrift {

// Exit codes shared by the CLI and the pipeline tests.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitBuildError = 2;
inline constexpr int kExitEngineError = 3;
inline constexpr int kExitVerifyFailed = 4;
inline constexpr int kExitVerifyInconclusive = 5;

namespace files {
inline std::filesystem::path tables(const std::filesystem::path& out) {
    return out / "tables.csv";
}
inline std::filesystem::path non_explosion(const std::filesystem::path& out) {
    return out / "non_explosion.json";
}
inline std::filesystem::path ensemble_bin(const std::filesystem::path& out, Scheme s) {
    return out / (s == Scheme::TransformedEuler ? "ensemble_transformed.bin"
                                                : "ensemble_weighted.bin");
}
inline std::filesystem::path ensemble_csv(const std::filesystem::path& out, Scheme s) {
    return out / (s == Scheme::TransformedEuler ? "ensemble_transformed.csv"
                                                : "ensemble_weighted.csv");
}
inline std::filesystem::path verify_json(const std::filesystem::path& out) {
    return out / "verify_report.json";
}
inline std::filesystem::path verify_txt(const std::filesystem::path& out) {
    return out / "verify_report.txt";
}
inline std::filesystem::path manifest(const std::filesystem::path& out) {
    return out / "manifest.json";
}
}  // namespace files

// The manifest names every file the pipeline wrote, together with the echoed
// config and its hash; a later command extends the section it owns.
inline void update_manifest(const Scenario& s, const std::filesystem::path& out,
                            const std::string& section,
                            const std::vector<std::string>& outputs) {
    nlohmann::json m;
    const auto path = files::manifest(out);
    if (std::filesystem::exists(path)) m = read_json_file(path);
    char hash[32], bhash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(config_hash(s)));
    std::snprintf(bhash, sizeof bhash, "%016llx",
                  static_cast<unsigned long long>(build_config_hash(s)));
    m["scenario"] = scenario_echo(s);
    m["config_hash"] = hash;
    m["build_hash"] = bhash;
    m["version"] = kVersion;
    m["seeds"] = {{"sim", s.seed}, {"env", s.drift.env_seed}};
    m["outputs"][section] = outputs;
    if (!m["outputs"].contains("manifest")) m["outputs"]["manifest"] = {"manifest.json"};
    write_json_file(path, m);
}

inline nlohmann::json non_explosion_to_json(const NonExplosionReport& r) {
    return nlohmann::json{
        {"right_integral", r.right_integral},
        {"left_integral", r.left_integral},
        {"right_density", r.right_density},
        {"left_density", r.left_density},
        {"right_flag", to_string(r.right_flag)},
        {"left_flag", to_string(r.left_flag)},
        {"overall", to_string(r.overall)},
    };
}

inline int cmd_build(const Scenario& s, const std::filesystem::path& out) {
    try {
        std::filesystem::create_directories(out);
        const auto artifacts = build_artifacts(s);
        write_tables_csv(files::tables(out), artifacts.table, artifacts.map);
        write_json_file(files::non_explosion(out),
                        non_explosion_to_json(artifacts.non_explosion));
        update_manifest(s, out, "build", {"tables.csv", "non_explosion.json"});
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "build: %s\n", e.what());
        return kExitBuildError;
    }
}

inline void require_matching_build(const Scenario& s, const std::filesystem::path& out) {
    if (!std::filesystem::exists(files::tables(out)))
        throw Error("built artifacts missing; run the build step first");
    if (std::filesystem::exists(files::manifest(out))) {
        const auto m = read_json_file(files::manifest(out));
        char bhash[32];
        std::snprintf(bhash, sizeof bhash, "%016llx",
                      static_cast<unsigned long long>(build_config_hash(s)));
        if (m.contains("build_hash") && m["build_hash"] != bhash)
            throw Error("built artifacts come from a different coefficient "
                        "configuration; rebuild first");
    }
}

inline int cmd_simulate(const Scenario& s, const std::filesystem::path& out) {
    try {
        require_matching_build(s, out);
        const auto artifacts = build_artifacts(s);
        const auto gamma = make_gamma(s);
        std::vector<std::string> outputs;
        const auto run_one = [&](Scheme scheme) {
            SimConfig cfg = s.sim_config();
            // engines get independent streams even under one scenario seed
            if (scheme == Scheme::GirsanovWeighted) cfg.seed = s.seed ^ 0x9e3779b97f4a7c15ull;
            PathEnsemble e = scheme == Scheme::TransformedEuler
                                 ? simulate_transformed(cfg, artifacts.map, gamma)
                                 : simulate_weighted(cfg, artifacts.map, artifacts.coeffs,
                                                     gamma);
            write_ensemble_binary(files::ensemble_bin(out, scheme), e);
            write_ensemble_csv(files::ensemble_csv(out, scheme), e, s.csv_path_cap);
            outputs.push_back(files::ensemble_bin(out, scheme).filename().string());
            outputs.push_back(files::ensemble_csv(out, scheme).filename().string());
        };
        if (s.engine != EngineSelect::Weighted) run_one(Scheme::TransformedEuler);
        if (s.engine != EngineSelect::Transformed) run_one(Scheme::GirsanovWeighted);
        update_manifest(s, out, "simulate", outputs);
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "simulate: %s\n", e.what());
        return kExitEngineError;
    }
}

namespace detail {

// Image-space sample paths for the empirical assumption validators.
inline std::vector<std::vector<double>> validator_paths(const Scenario& s,
                                                        const HarmonicMap& map,
                                                        std::size_t count) {
    const std::size_t n = 128;
    const double dt = s.t_horizon / static_cast<double>(n);
    const double sd = std::sqrt(dt);
    const double lo = map.image_min() * 0.9, hi = map.image_max() * 0.9;
    std::vector<std::vector<double>> paths(count);
    for (std::size_t i = 0; i < count; ++i) {
        const NormalStream stream(s.seed ^ 0x5eedf00dull, i);
        auto& p = paths[i];
        p.resize(n + 1);
        p[0] = map.h(s.x0);
        for (std::size_t k = 0; k < n; ++k)
            p[k + 1] = std::clamp(
                p[k] + sd * stream.normal(0, static_cast<std::uint32_t>(k)), lo, hi);
    }
    return paths;
}

}  // namespace detail

struct VerifyOutcome {
    std::vector<VerificationReport> reports;
    int exit_code = kExitOk;
};

inline VerifyOutcome run_verify_battery(const Scenario& s,
                                        const std::filesystem::path& out) {
    const auto artifacts = build_artifacts(s);
    const auto gamma = make_gamma(s);

    std::optional<PathEnsemble> transformed, weighted;
    if (std::filesystem::exists(files::ensemble_bin(out, Scheme::TransformedEuler)))
        transformed = read_ensemble_binary(files::ensemble_bin(out, Scheme::TransformedEuler));
    if (std::filesystem::exists(files::ensemble_bin(out, Scheme::GirsanovWeighted)))
        weighted = read_ensemble_binary(files::ensemble_bin(out, Scheme::GirsanovWeighted));

    VerifyOutcome outcome;
    const auto& battery = s.verify.battery;
    const auto wants = [&](const char* name) {
        return std::find(battery.begin(), battery.end(), name) != battery.end();
    };

    if (wants("non_explosion")) {
        VerificationReport r;
        r.test_name = "non-explosion-heuristic";
        r.flag = artifacts.non_explosion.overall == HeuristicFlag::PassHeuristic
                     ? TestFlag::Pass
                     : TestFlag::Inconclusive;
        ProbeResult right{"right window integral", artifacts.non_explosion.right_integral,
                          0.0, std::numeric_limits<double>::quiet_NaN(), true};
        ProbeResult left{"left window integral", artifacts.non_explosion.left_integral, 0.0,
                         std::numeric_limits<double>::quiet_NaN(), true};
        r.rows = {right, left};
        outcome.reports.push_back(std::move(r));
    }

    if (wants("assumptions")) {
        const auto paths = detail::validator_paths(s, artifacts.map, 200);
        const auto growth =
            validate_growth(gamma, artifacts.map, artifacts.coeffs, paths, s.t_horizon);
        VerificationReport r;
        r.test_name = "assumption-validators";
        r.seed = s.seed;
        r.flag = growth.pass ? TestFlag::Pass : TestFlag::Fail;
        r.rows.push_back({"growth worst ratio (K=" + std::to_string(gamma.growth_K) + ")",
                          growth.worst_ratio, 0.0,
                          std::numeric_limits<double>::quiet_NaN(), growth.pass});
        double sup_at_zero;
        if (gamma.lipschitz_K > 0.0) {
            std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
            for (std::size_t i = 0; i + 1 < paths.size(); i += 2)
                pairs.emplace_back(paths[i], paths[i + 1]);
            const auto lip = validate_lipschitz(gamma, artifacts.map, pairs, s.t_horizon);
            if (!lip.pass) r.flag = TestFlag::Fail;
            r.rows.push_back({"lipschitz worst ratio (K=" +
                                  std::to_string(gamma.lipschitz_K) + ")",
                              lip.worst_ratio, 0.0,
                              std::numeric_limits<double>::quiet_NaN(), lip.pass});
            sup_at_zero = lip.sup_at_zero;
        } else {
            // no path-Lipschitz bound is claimed for this functional
            r.rows.push_back({"lipschitz bound: not claimed (K=0)", 0.0, 0.0,
                              std::numeric_limits<double>::quiet_NaN(), true});
            sup_at_zero = transported_sup_on_zero_path(gamma, artifacts.map, s.t_horizon);
        }
        r.rows.push_back({"sup |transported| on zero path", sup_at_zero, 0.0,
                          std::numeric_limits<double>::quiet_NaN(),
                          std::isfinite(sup_at_zero)});
        const auto cls = s.sigma0_modulus_class == "half_hoelder" ? ModulusClass::HalfHoelder
                                                                  : ModulusClass::Lipschitz;
        const auto modulus = validate_sigma0_modulus(artifacts.map, cls,
                                                     s.sigma0_modulus_constant);
        r.rows.push_back({"sigma0 " + modulus.details + " worst ratio (C=" +
                              std::to_string(s.sigma0_modulus_constant) + ")",
                          modulus.worst_ratio, 0.0,
                          std::numeric_limits<double>::quiet_NaN(), modulus.pass});
        if (!modulus.pass) r.flag = TestFlag::Fail;
        outcome.reports.push_back(std::move(r));
    }

    if (wants("weight_normalization") && weighted) {
        const double n = static_cast<double>(weighted->n_paths);
        const double mean = weighted->weight_sum() / n;
        const double se = bootstrap_stderr_mean(weighted->weights, 500, weighted->seed + 17);
        VerificationReport r;
        r.test_name = "weight-normalization";
        r.seed = weighted->seed;
        r.n_paths = weighted->n_paths;
        const double z = se > 0.0 ? (mean - 1.0) / se : 0.0;
        const bool ok = std::fabs(z) <= 3.0;
        r.rows.push_back({"mean weight - 1", mean - 1.0, se, z, ok});
        r.flag = ok ? TestFlag::Pass : TestFlag::Fail;
        outcome.reports.push_back(std::move(r));
    }

    if (wants("martingale")) {
        const auto spec = default_martingale_battery(artifacts.map, s.t_horizon);
        const auto run_on = [&](const PathEnsemble& e, const char* label) {
            auto r = test_martingale_property(e, spec, artifacts.map, artifacts.coeffs, gamma);
            r.test_name += std::string(" [") + label + "]";
            outcome.reports.push_back(std::move(r));
        };
        if (transformed) run_on(*transformed, "transformed");
        if (weighted) run_on(*weighted, "weighted");
    }

    if (wants("quadratic_variation")) {
        if (transformed && transformed->n_steps >= s.verify.qv_min_steps)
            outcome.reports.push_back(test_quadratic_variation(
                *transformed, artifacts.coeffs, s.verify.qv_min_steps, s.verify.qv_error_cap));
        else
            throw Error("quadratic_variation requires a transformed ensemble with >= " +
                        std::to_string(s.verify.qv_min_steps) + " steps");
    }

    if (wants("law_equivalence")) {
        if (!transformed || !weighted)
            throw Error("law_equivalence requires both engines (engine=both)");
        outcome.reports.push_back(test_law_equivalence(*transformed, *weighted,
                                                       default_observables(),
                                                       s.verify.ks_p_floor,
                                                       s.verify.bootstrap));
    }

    if (wants("pathwise_uniqueness")) {
        SimConfig cfg = s.sim_config();
        cfg.n_steps = s.verify.refinement_base_steps;
        cfg.n_paths = s.verify.refinement_streams;
        cfg.seed = s.seed + 7777;
        outcome.reports.push_back(test_pathwise_uniqueness(cfg, artifacts.map, gamma,
                                                           s.verify.refinement_levels));
    }

    bool any_fail = false, any_inconclusive = false;
    for (const auto& r : outcome.reports) {
        any_fail = any_fail || r.flag == TestFlag::Fail;
        any_inconclusive = any_inconclusive || r.flag == TestFlag::Inconclusive;
    }
    outcome.exit_code = any_fail           ? kExitVerifyFailed
                        : any_inconclusive ? kExitVerifyInconclusive
                                           : kExitOk;
    return outcome;
}

inline int cmd_verify(const Scenario& s, const std::filesystem::path& out) {
    try {
        const auto outcome = run_verify_battery(s, out);
        nlohmann::json reports = nlohmann::json::array();
        for (const auto& r : outcome.reports) reports.push_back(report_to_json(r));
        const char* overall = outcome.exit_code == kExitOk ? "PASS"
                              : outcome.exit_code == kExitVerifyFailed ? "FAIL"
                                                                       : "INCONCLUSIVE";
        write_json_file(files::verify_json(out),
                        nlohmann::json{{"overall", overall}, {"reports", reports}});
        const std::string table = report_table(outcome.reports);
        write_text_file(files::verify_txt(out), table);
        std::fputs(table.c_str(), stdout);
        update_manifest(s, out, "verify", {"verify_report.json", "verify_report.txt"});
        return outcome.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "verify: %s\n", e.what());
        return kExitUsage;
    }
}

inline int cmd_plot(const Scenario& s, const std::filesystem::path& out) {
    try {
        require_matching_build(s, out);
        const auto artifacts = build_artifacts(s);
        std::vector<std::string> outputs;

        plot_transform_curves((out / "transform.svg").string(), artifacts.table,
                              artifacts.map);
        outputs.push_back("transform.svg");

        std::optional<PathEnsemble> transformed, weighted;
        if (std::filesystem::exists(files::ensemble_bin(out, Scheme::TransformedEuler)))
            transformed =
                read_ensemble_binary(files::ensemble_bin(out, Scheme::TransformedEuler));
        if (std::filesystem::exists(files::ensemble_bin(out, Scheme::GirsanovWeighted)))
            weighted = read_ensemble_binary(files::ensemble_bin(out, Scheme::GirsanovWeighted));
        if (!transformed && !weighted) throw Error("no ensembles to plot; simulate first");
        const PathEnsemble& primary = transformed ? *transformed : *weighted;

        plot_sample_paths((out / "paths.svg").string(), primary);
        outputs.push_back("paths.svg");

        const std::size_t qv_min = std::max<std::size_t>(64, primary.n_steps / 8);
        plot_qv_refinement((out / "qv.svg").string(),
                           test_quadratic_variation(primary, artifacts.coeffs, qv_min, 1.0));
        outputs.push_back("qv.svg");

        plot_marginal_histograms((out / "marginals.svg").string(), primary,
                                 transformed && weighted ? &*weighted : nullptr);
        outputs.push_back("marginals.svg");

        update_manifest(s, out, "plot", outputs);
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "plot: %s\n", e.what());
        return kExitBuildError;
    }
}

inline int cmd_all(const Scenario& s, const std::filesystem::path& out) {
    if (const int rc = cmd_build(s, out); rc != kExitOk) return rc;
    if (const int rc = cmd_simulate(s, out); rc != kExitOk) return rc;
    const int verify_rc = cmd_verify(s, out);
    if (verify_rc != kExitOk && verify_rc != kExitVerifyInconclusive) return verify_rc;
    if (const int rc = cmd_plot(s, out); rc != kExitOk) return rc;
    return verify_rc;
}

}  // namespace distdrift
