// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "distdrift/runner.hpp"
#include "distdrift/version.hpp"

namespace {

struct CommonOptions {
    std::string scenario_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t paths = 0;
    std::size_t steps = 0;
    std::string engine;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--scenario", opt.scenario_path, "scenario config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opt.out_dir, "output directory");
    cmd->add_option("--seed", opt.seed, "override the scenario RNG seed")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    cmd->add_option("--paths", opt.paths, "override the ensemble size");
    cmd->add_option("--steps", opt.steps, "override the time grid size");
    cmd->add_option("--engine", opt.engine, "override the engine selection")
        ->check(CLI::IsMember({"transformed", "weighted", "both"}));
}

distdrift::Scenario load_with_overrides(const CommonOptions& opt) {
    auto s = distdrift::load_scenario(opt.scenario_path);
    if (opt.seed_set) s.seed = opt.seed;
    if (opt.paths > 0) s.n_paths = opt.paths;
    if (opt.steps > 0) s.n_steps = opt.steps;
    if (opt.engine == "transformed") s.engine = distdrift::EngineSelect::Transformed;
    if (opt.engine == "weighted") s.engine = distdrift::EngineSelect::Weighted;
    if (opt.engine == "both") s.engine = distdrift::EngineSelect::Both;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distdrift: simulation and verification toolkit for one-dimensional "
                 "path-dependent SDEs with distributional drift"};
    app.set_version_flag("--version", distdrift::kVersion);
    app.require_subcommand(1);

    CommonOptions build_opt, sim_opt, verify_opt, plot_opt, all_opt;
    auto* build = app.add_subcommand("build", "build the drift potential and harmonic map");
    add_common(build, build_opt);
    auto* simulate = app.add_subcommand("simulate", "run the Monte Carlo engines");
    add_common(simulate, sim_opt);
    auto* verify = app.add_subcommand("verify", "run the statistical verification battery");
    add_common(verify, verify_opt);
    auto* plot = app.add_subcommand("plot", "emit SVG diagnostics");
    add_common(plot, plot_opt);
    auto* all = app.add_subcommand("all", "build, simulate, verify and plot");
    add_common(all, all_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : distdrift::kExitUsage;
    }

    try {
        if (build->parsed())
            return distdrift::cmd_build(load_with_overrides(build_opt), build_opt.out_dir);
        if (simulate->parsed())
            return distdrift::cmd_simulate(load_with_overrides(sim_opt), sim_opt.out_dir);
        if (verify->parsed())
            return distdrift::cmd_verify(load_with_overrides(verify_opt), verify_opt.out_dir);
        if (plot->parsed())
            return distdrift::cmd_plot(load_with_overrides(plot_opt), plot_opt.out_dir);
        if (all->parsed())
            return distdrift::cmd_all(load_with_overrides(all_opt), all_opt.out_dir);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "distdrift: %s\n", e.what());
        return distdrift::kExitUsage;
    }
    return distdrift::kExitUsage;
}
