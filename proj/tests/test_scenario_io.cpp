// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "distdrift/artifacts_io.hpp"
#include "distdrift/runner.hpp"
#include "distdrift/scenario.hpp"
#include "oracles.hpp"

using namespace distdrift;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("distdrift_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Scenario tiny_trivial_scenario() {
    Scenario s;
    s.name = "tiny";
    s.grid_half_width = 4.0;
    s.grid_dx = 0.01;
    s.drift.kind = "explicit_potential";
    s.drift.form = "zero";
    s.n_steps = 128;
    s.n_paths = 300;
    s.seed = 12;
    s.verify.battery = {"non_explosion", "martingale"};
    return s;
}

}  // namespace

TEST_CASE("scenario parsing fills defaults and hashes stably") {
    const auto j = nlohmann::json::parse(R"({
        "name": "parse_check",
        "sigma": {"kind": "constant", "value": 2.0},
        "drift": {"kind": "scaled_sin", "amplitude": 0.25},
        "gamma": {"kind": "delay", "lag": 0.1, "g_name": "tanh"},
        "sim": {"n_paths": 77, "engine": "both"}
    })");
    const auto s = scenario_from_json(j);
    CHECK(s.name == "parse_check");
    CHECK(s.sigma.value == 2.0);
    CHECK(s.drift.amplitude == 0.25);
    CHECK(s.gamma.lag == 0.1);
    CHECK(s.n_paths == 77);
    CHECK(s.engine == EngineSelect::Both);
    CHECK(s.grid_half_width == 8.0);  // default
    CHECK(config_hash(s) == config_hash(scenario_from_json(j)));

    auto j2 = j;
    j2["sim"]["seed"] = 999;
    CHECK(config_hash(s) != config_hash(scenario_from_json(j2)));

    const auto echo = scenario_echo(s);
    CHECK(echo.contains("build"));
    CHECK(echo["verify"]["z_threshold"] == 3.0);
    CHECK_THROWS(scenario_from_json(nlohmann::json::parse(
        R"({"sim": {"engine": "warp"}})")));
}

TEST_CASE("shipped scenarios parse") {
    for (const char* name : {"bm_degenerate", "const_drift", "sin_drift", "sin_drift_delay",
                             "brox_delay", "qv_bm", "linear_potential"}) {
        const auto path = fs::path(DISTDRIFT_SCENARIO_DIR) / (std::string(name) + ".json");
        CAPTURE(name);
        CHECK_NOTHROW(load_scenario(path));
    }
}

TEST_CASE("coefficients load from two-column CSV files") {
    const auto dir = temp_dir("csv_coeffs");
    {
        std::ofstream b(dir / "b.csv");
        b << "x,b\n";
        // b(x) = x/2 sampled on a coarse grid: potential 2*b = x
        for (int i = -60; i <= 60; ++i)
            b << (0.1 * i) << "," << (0.05 * i) << "\n";
        std::ofstream sg(dir / "sigma.csv");
        sg << "x,sigma\n";
        for (int i = -60; i <= 60; ++i) sg << (0.1 * i) << "," << 2.0 << "\n";
    }
    Scenario s = tiny_trivial_scenario();
    s.grid_half_width = 4.0;
    s.drift.kind = "csv";
    s.drift.csv_path = (dir / "b.csv").string();
    s.sigma.kind = "csv";
    s.sigma.csv_path = (dir / "sigma.csv").string();
    s.mollifier_scale = 0.05;
    s.quadrature_tolerance = 1e-3;
    const auto artifacts = build_artifacts(s);
    CHECK(artifacts.coeffs.sigma(0.33) == doctest::Approx(2.0).epsilon(1e-9));
    // potential: 2 * (1/2) / 4 * x = x / 4, exact away from the sample edges
    CHECK(artifacts.table(2.0) == doctest::Approx(0.5).scale(1.0).epsilon(1e-6));
    CHECK(artifacts.table(-2.0) == doctest::Approx(-0.5).scale(1.0).epsilon(1e-6));
}

TEST_CASE("build command writes tables anchored to the identity for flat input") {
    const auto out = temp_dir("build_trivial");
    const auto s = tiny_trivial_scenario();
    REQUIRE(cmd_build(s, out) == kExitOk);
    REQUIRE(fs::exists(files::tables(out)));

    std::ifstream f(files::tables(out));
    std::string header;
    std::getline(f, header);
    CHECK(header == "x,Sigma,h,h_prime,sigma0_of_h");
    std::string line;
    while (std::getline(f, line)) {
        double x, sig, h, hp, s0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &x, &sig, &h, &hp, &s0) == 5);
        CHECK(sig == 0.0);
        CHECK(std::fabs(h - x) <= 1e-12);
        CHECK(hp == 1.0);
        CHECK(std::fabs(s0 - 1.0) <= 1e-12);
    }
    const auto nonexp = read_json_file(files::non_explosion(out));
    CHECK(nonexp["overall"] == "PASS-heuristic");
}

TEST_CASE("sine-drift build matches the quadrature oracle through the CSV") {
    const auto out = temp_dir("build_sin");
    Scenario s = tiny_trivial_scenario();
    s.drift.kind = "scaled_sin";
    s.drift.amplitude = 0.5;
    s.mollifier_scale = 1e-4;
    REQUIRE(cmd_build(s, out) == kExitOk);
    // the grid contains x = 1 exactly; find its row
    std::ifstream f(files::tables(out));
    std::string line;
    std::getline(f, line);
    double h_at_1 = 0.0;
    bool found = false;
    while (std::getline(f, line)) {
        double x, sig, h, hp, s0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &x, &sig, &h, &hp, &s0) == 5);
        if (std::fabs(x - 1.0) < 1e-12) {
            h_at_1 = h;
            found = true;
        }
    }
    REQUIRE(found);
    CHECK(h_at_1 == doctest::Approx(0.65132491249252666).scale(1.0).epsilon(1e-7));
}

TEST_CASE("build output is bit-identical across runs") {
    const auto out1 = temp_dir("det_a"), out2 = temp_dir("det_b");
    Scenario s = tiny_trivial_scenario();
    s.drift.kind = "brownian_env";
    s.drift.env_seed = 7;
    s.drift.env_step = 0.05;
    s.drift.env_scale = -0.5;
    s.mollifier_scale = 0.05;
    s.quadrature_tolerance = 1e-3;
    s.convergence_threshold = 0.5;
    REQUIRE(cmd_build(s, out1) == kExitOk);
    REQUIRE(cmd_build(s, out2) == kExitOk);
    CHECK(slurp(files::tables(out1)) == slurp(files::tables(out2)));
    CHECK(slurp(files::manifest(out1)) == slurp(files::manifest(out2)));
}

TEST_CASE("ensemble files round trip bit for bit") {
    const auto out = temp_dir("ensemble_io");
    const auto s = tiny_trivial_scenario();
    const auto artifacts = build_artifacts(s);
    auto gamma = PathFunctional::delay(0.2, [](double x) { return std::tanh(x); });
    const auto e = simulate_transformed(s.sim_config(), artifacts.map, gamma);

    write_ensemble_binary(out / "e.bin", e);
    const auto back = read_ensemble_binary(out / "e.bin");
    CHECK(back.n_paths == e.n_paths);
    CHECK(back.n_steps == e.n_steps);
    CHECK(back.seed == e.seed);
    CHECK(back.scheme == e.scheme);
    CHECK(back.t_horizon == e.t_horizon);
    CHECK(back.x0 == e.x0);
    CHECK(back.times == e.times);
    CHECK(back.x_paths == e.x_paths);
    CHECK(back.y_paths == e.y_paths);
    CHECK(back.w_increments == e.w_increments);
    CHECK(back.weights == e.weights);

    write_ensemble_csv(out / "e.csv", e, 3);
    std::ifstream f(out / "e.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "path_id,t,X,Y,weight");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == 3 * (e.n_steps + 1));  // capped at 3 paths

    SUBCASE("corrupt magic is rejected") {
        std::ofstream bad(out / "bad.bin", std::ios::binary);
        bad << "NOTMAGIC" << std::string(64, '\0');
        bad.close();
        CHECK_THROWS_AS(read_ensemble_binary(out / "bad.bin"), Error);
    }
}

TEST_CASE("pipeline commands write what the manifest claims, deterministically") {
    const auto out1 = temp_dir("pipe_a"), out2 = temp_dir("pipe_b");
    Scenario s = tiny_trivial_scenario();
    s.engine = EngineSelect::Both;
    s.verify.battery = {"non_explosion", "weight_normalization", "martingale",
                        "law_equivalence"};
    s.verify.bootstrap = 100;

    for (const auto& out : {out1, out2}) {
        REQUIRE(cmd_build(s, out) == kExitOk);
        REQUIRE(cmd_simulate(s, out) == kExitOk);
        REQUIRE(cmd_verify(s, out) == kExitOk);
        REQUIRE(cmd_plot(s, out) == kExitOk);
    }
    CHECK(slurp(files::manifest(out1)) == slurp(files::manifest(out2)));
    CHECK(slurp(files::verify_json(out1)) == slurp(files::verify_json(out2)));
    for (const char* svg : {"transform.svg", "paths.svg", "qv.svg", "marginals.svg"}) {
        const auto body = slurp(out1 / svg);
        CHECK(body == slurp(out2 / svg));
        // well-formed: closes every polyline tag and the document
        CHECK(body.find("</svg>") != std::string::npos);
        std::size_t opened = 0, closed = 0, pos = 0;
        while ((pos = body.find("<polyline", pos)) != std::string::npos) { ++opened; pos += 9; }
        pos = 0;
        while ((pos = body.find("\"/>", pos)) != std::string::npos) { ++closed; pos += 3; }
        CHECK(opened >= 1);
        CHECK(closed >= opened);
    }

    // no orphan writes: everything in the directory is named by the manifest
    const auto manifest = read_json_file(files::manifest(out1));
    std::vector<std::string> claimed;
    for (const auto& [section, list] : manifest["outputs"].items())
        for (const auto& f : list) claimed.push_back(f.get<std::string>());
    for (const auto& entry : fs::directory_iterator(out1)) {
        const auto name = entry.path().filename().string();
        CAPTURE(name);
        CHECK(std::find(claimed.begin(), claimed.end(), name) != claimed.end());
    }
}

TEST_CASE("verify exit codes reflect the battery outcome") {
    SUBCASE("inconclusive heuristics give the dedicated code") {
        const auto out = temp_dir("verify_inc");
        Scenario s = tiny_trivial_scenario();
        s.drift.form = "linear";  // right tail integrable: heuristic cannot pass
        s.verify.battery = {"non_explosion"};
        REQUIRE(cmd_build(s, out) == kExitOk);
        REQUIRE(cmd_simulate(s, out) == kExitOk);
        CHECK(cmd_verify(s, out) == kExitVerifyInconclusive);
    }
    SUBCASE("a falsified declared constant fails the run") {
        const auto out = temp_dir("verify_fail");
        Scenario s = tiny_trivial_scenario();
        s.gamma.kind = "instantaneous";
        s.gamma.g_name = "tanh";
        s.gamma.g_scale = 5.0;
        s.gamma.growth_k = 0.01;  // far too small: validator must falsify it
        s.verify.battery = {"assumptions"};
        REQUIRE(cmd_build(s, out) == kExitOk);
        CHECK(cmd_verify(s, out) == kExitVerifyFailed);
    }
}

TEST_CASE("stale artifacts from another coefficient configuration are rejected") {
    const auto out = temp_dir("stale");
    Scenario s = tiny_trivial_scenario();
    REQUIRE(cmd_build(s, out) == kExitOk);
    Scenario other = s;
    other.drift.form = "sin";  // different potential, same output directory
    CHECK(cmd_simulate(other, out) == kExitEngineError);
    CHECK(cmd_simulate(s, out) == kExitOk);  // matching config still runs
}

TEST_CASE("plot fails cleanly without inputs and on empty ensembles") {
    const auto out = temp_dir("plot_missing");
    const auto s = tiny_trivial_scenario();
    CHECK(cmd_plot(s, out) == kExitBuildError);
    CHECK_FALSE(fs::exists(out / "transform.svg"));

    REQUIRE(cmd_build(s, out) == kExitOk);
    CHECK(cmd_plot(s, out) == kExitBuildError);  // no ensembles yet
    CHECK_FALSE(fs::exists(out / "paths.svg"));

    PathEnsemble empty;
    CHECK_THROWS(plot_sample_paths((out / "unused.svg").string(), empty));
    CHECK_FALSE(fs::exists(out / "unused.svg"));
}
