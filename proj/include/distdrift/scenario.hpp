// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "distdrift/coefficients.hpp"
#include "distdrift/errors.hpp"
#include "distdrift/harmonic.hpp"
#include "distdrift/path_functional.hpp"
#include "distdrift/rng.hpp"
#include "distdrift/simulate.hpp"

namespace distdrift {

// ---------------------------------------------------------------------------
// Scenario: one structured config file drives the whole pipeline. Every field
// has a default; the echoed config (defaults filled in) goes into the run
// manifest so a run is reproducible from its outputs alone.
// ---------------------------------------------------------------------------

enum class EngineSelect { Transformed, Weighted, Both };

struct SigmaSpec {
    std::string kind = "constant";  // constant | csv
    double value = 1.0;
    std::string csv_path;
};

struct DriftSpec {
    std::string kind = "zero";  // zero | scaled_sin | brownian_env | csv | explicit_potential
    double amplitude = 0.5;     // scaled_sin: b = amplitude * sin
    std::uint64_t env_seed = 0; // brownian_env
    double env_step = 0.05;
    double env_scale = -0.5;    // brownian_env: b = env_scale * B
    std::string csv_path;
    std::string form = "zero";  // explicit_potential: zero | sin | linear
};

struct GammaSpec {
    std::string kind = "zero";  // zero | instantaneous | delay | running_max | integral_average
    std::string g_name = "identity";  // identity | tanh | sin | constant
    double g_scale = 1.0;
    double lag = 0.0;
    double growth_k = 1.0;
    double lipschitz_k = 1.0;
    double sup_at_zero = 0.0;
};

struct VerifySpec {
    std::vector<std::string> battery{"non_explosion", "martingale"};
    double z_threshold = 3.0;
    double ks_p_floor = 0.01;
    std::size_t bootstrap = 200;
    std::size_t refinement_levels = 3;
    std::size_t refinement_streams = 100;
    std::size_t refinement_base_steps = 1024;
    std::size_t qv_min_steps = 1024;
    double qv_error_cap = 0.05;
};

struct Scenario {
    std::string name = "scenario";
    double grid_half_width = 8.0;
    double grid_dx = 0.005;
    double mollifier_scale = 1e-3;
    SigmaSpec sigma;
    DriftSpec drift;
    GammaSpec gamma;

    double t_horizon = 1.0;
    std::size_t n_steps = 1024;
    std::size_t n_paths = 1000;
    double x0 = 0.0;
    std::uint64_t seed = 1;
    EngineSelect engine = EngineSelect::Transformed;

    double quadrature_tolerance = 1e-7;
    double convergence_threshold = 1e-6;
    double non_explosion_floor = 0.2;

    std::string sigma0_modulus_class = "lipschitz";  // or half_hoelder
    double sigma0_modulus_constant = 10.0;

    double sigma0_cap = 1e6;
    double ess_floor = 0.1;
    double grid_exit_cap = 0.01;
    std::size_t csv_path_cap = 200;  // ensemble CSV row cap (paths)

    VerifySpec verify;

    SimConfig sim_config() const {
        SimConfig cfg;
        cfg.t_horizon = t_horizon;
        cfg.n_steps = n_steps;
        cfg.n_paths = n_paths;
        cfg.x0 = x0;
        cfg.seed = seed;
        cfg.grid_exit_fraction_cap = grid_exit_cap;
        cfg.ess_floor_fraction = ess_floor;
        return cfg;
    }
};

namespace detail {

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

inline std::vector<std::pair<double, double>> read_two_column_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open csv file: " + path);
    std::vector<std::pair<double, double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0])))
            continue;  // header or comment
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw Error("malformed csv row: " + line);
        rows.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    }
    if (rows.size() < 2) throw Error("csv needs at least two rows: " + path);
    return rows;
}

}  // namespace detail

inline Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    detail::read_into(j, "name", s.name);
    if (j.contains("grid")) {
        detail::read_into(j.at("grid"), "half_width", s.grid_half_width);
        detail::read_into(j.at("grid"), "dx", s.grid_dx);
    }
    detail::read_into(j, "mollifier_scale", s.mollifier_scale);
    if (j.contains("sigma")) {
        const auto& js = j.at("sigma");
        detail::read_into(js, "kind", s.sigma.kind);
        detail::read_into(js, "value", s.sigma.value);
        detail::read_into(js, "csv_path", s.sigma.csv_path);
    }
    if (j.contains("drift")) {
        const auto& jd = j.at("drift");
        detail::read_into(jd, "kind", s.drift.kind);
        detail::read_into(jd, "amplitude", s.drift.amplitude);
        detail::read_into(jd, "env_seed", s.drift.env_seed);
        detail::read_into(jd, "env_step", s.drift.env_step);
        detail::read_into(jd, "env_scale", s.drift.env_scale);
        detail::read_into(jd, "csv_path", s.drift.csv_path);
        detail::read_into(jd, "form", s.drift.form);
    }
    if (j.contains("gamma")) {
        const auto& jg = j.at("gamma");
        detail::read_into(jg, "kind", s.gamma.kind);
        detail::read_into(jg, "g_name", s.gamma.g_name);
        detail::read_into(jg, "g_scale", s.gamma.g_scale);
        detail::read_into(jg, "lag", s.gamma.lag);
        detail::read_into(jg, "growth_k", s.gamma.growth_k);
        detail::read_into(jg, "lipschitz_k", s.gamma.lipschitz_k);
        detail::read_into(jg, "sup_at_zero", s.gamma.sup_at_zero);
    }
    if (j.contains("sim")) {
        const auto& js = j.at("sim");
        detail::read_into(js, "t_horizon", s.t_horizon);
        detail::read_into(js, "n_steps", s.n_steps);
        detail::read_into(js, "n_paths", s.n_paths);
        detail::read_into(js, "x0", s.x0);
        detail::read_into(js, "seed", s.seed);
        std::string engine = "transformed";
        detail::read_into(js, "engine", engine);
        if (engine == "transformed") s.engine = EngineSelect::Transformed;
        else if (engine == "weighted") s.engine = EngineSelect::Weighted;
        else if (engine == "both") s.engine = EngineSelect::Both;
        else throw Error("unknown engine: " + engine);
    }
    if (j.contains("sigma0_modulus")) {
        const auto& jm = j.at("sigma0_modulus");
        detail::read_into(jm, "class", s.sigma0_modulus_class);
        detail::read_into(jm, "constant", s.sigma0_modulus_constant);
    }
    if (j.contains("build")) {
        const auto& jb = j.at("build");
        detail::read_into(jb, "quadrature_tolerance", s.quadrature_tolerance);
        detail::read_into(jb, "convergence_threshold", s.convergence_threshold);
        detail::read_into(jb, "non_explosion_floor", s.non_explosion_floor);
    }
    if (j.contains("limits")) {
        const auto& jl = j.at("limits");
        detail::read_into(jl, "sigma0_cap", s.sigma0_cap);
        detail::read_into(jl, "ess_floor", s.ess_floor);
        detail::read_into(jl, "grid_exit_cap", s.grid_exit_cap);
        detail::read_into(jl, "csv_path_cap", s.csv_path_cap);
    }
    if (j.contains("verify")) {
        const auto& jv = j.at("verify");
        detail::read_into(jv, "battery", s.verify.battery);
        detail::read_into(jv, "z_threshold", s.verify.z_threshold);
        detail::read_into(jv, "ks_p_floor", s.verify.ks_p_floor);
        detail::read_into(jv, "bootstrap", s.verify.bootstrap);
        detail::read_into(jv, "refinement_levels", s.verify.refinement_levels);
        detail::read_into(jv, "refinement_streams", s.verify.refinement_streams);
        detail::read_into(jv, "refinement_base_steps", s.verify.refinement_base_steps);
        detail::read_into(jv, "qv_min_steps", s.verify.qv_min_steps);
        detail::read_into(jv, "qv_error_cap", s.verify.qv_error_cap);
    }
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open scenario file: " + path.string());
    nlohmann::json j;
    f >> j;
    return scenario_from_json(j);
}

// Config echo with every default filled in.
inline nlohmann::json scenario_echo(const Scenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["grid"] = {{"half_width", s.grid_half_width}, {"dx", s.grid_dx}};
    j["mollifier_scale"] = s.mollifier_scale;
    j["sigma"] = {{"kind", s.sigma.kind}, {"value", s.sigma.value},
                  {"csv_path", s.sigma.csv_path}};
    j["drift"] = {{"kind", s.drift.kind},       {"amplitude", s.drift.amplitude},
                  {"env_seed", s.drift.env_seed}, {"env_step", s.drift.env_step},
                  {"env_scale", s.drift.env_scale}, {"csv_path", s.drift.csv_path},
                  {"form", s.drift.form}};
    j["gamma"] = {{"kind", s.gamma.kind},           {"g_name", s.gamma.g_name},
                  {"g_scale", s.gamma.g_scale},     {"lag", s.gamma.lag},
                  {"growth_k", s.gamma.growth_k},   {"lipschitz_k", s.gamma.lipschitz_k},
                  {"sup_at_zero", s.gamma.sup_at_zero}};
    const char* engine = s.engine == EngineSelect::Transformed ? "transformed"
                         : s.engine == EngineSelect::Weighted  ? "weighted"
                                                               : "both";
    j["sim"] = {{"t_horizon", s.t_horizon}, {"n_steps", s.n_steps}, {"n_paths", s.n_paths},
                {"x0", s.x0},               {"seed", s.seed},       {"engine", engine}};
    j["sigma0_modulus"] = {{"class", s.sigma0_modulus_class},
                           {"constant", s.sigma0_modulus_constant}};
    j["build"] = {{"quadrature_tolerance", s.quadrature_tolerance},
                  {"convergence_threshold", s.convergence_threshold},
                  {"non_explosion_floor", s.non_explosion_floor}};
    j["limits"] = {{"sigma0_cap", s.sigma0_cap},
                   {"ess_floor", s.ess_floor},
                   {"grid_exit_cap", s.grid_exit_cap},
                   {"csv_path_cap", s.csv_path_cap}};
    j["verify"] = {{"battery", s.verify.battery},
                   {"z_threshold", s.verify.z_threshold},
                   {"ks_p_floor", s.verify.ks_p_floor},
                   {"bootstrap", s.verify.bootstrap},
                   {"refinement_levels", s.verify.refinement_levels},
                   {"refinement_streams", s.verify.refinement_streams},
                   {"refinement_base_steps", s.verify.refinement_base_steps},
                   {"qv_min_steps", s.verify.qv_min_steps},
                   {"qv_error_cap", s.verify.qv_error_cap}};
    return j;
}

namespace detail {
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}
}  // namespace detail

inline std::uint64_t config_hash(const Scenario& s) {
    return detail::fnv1a(scenario_echo(s).dump());
}

// Hash of the fields that determine the built tables only, so simulation can
// detect artifacts left over from a different coefficient configuration.
inline std::uint64_t build_config_hash(const Scenario& s) {
    const auto echo = scenario_echo(s);
    nlohmann::json j{{"grid", echo.at("grid")},
                     {"mollifier_scale", echo.at("mollifier_scale")},
                     {"sigma", echo.at("sigma")},
                     {"drift", echo.at("drift")},
                     {"build", echo.at("build")}};
    return detail::fnv1a(j.dump());
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline std::function<double(double)> make_sigma(const Scenario& s) {
    if (s.sigma.kind == "constant") {
        const double v = s.sigma.value;
        return [v](double) { return v; };
    }
    if (s.sigma.kind == "csv") {
        auto rows = detail::read_two_column_csv(s.sigma.csv_path);
        std::vector<double> xs(rows.size()), ys(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            xs[i] = rows[i].first;
            ys[i] = rows[i].second;
        }
        auto table = std::make_shared<HermiteTable>(
            HermiteTable::with_fd_slopes(std::move(xs), std::move(ys)));
        return [table](double x) {
            const double lo = table->front_x(), hi = table->back_x();
            return (*table)(std::clamp(x, lo, hi));
        };
    }
    throw Error("unknown sigma kind: " + s.sigma.kind);
}

inline DriftSource make_drift(const Scenario& s) {
    const auto& d = s.drift;
    if (d.kind == "zero")
        return SmoothDrift{[](double) { return 0.0; }, [](double) { return 0.0; }};
    if (d.kind == "scaled_sin") {
        const double a = d.amplitude;
        return SmoothDrift{[a](double x) { return a * std::sin(x); },
                           [a](double x) { return a * std::cos(x); }};
    }
    if (d.kind == "brownian_env") {
        const double pad = 3.0 * s.mollifier_scale + 2.0 * d.env_step;
        const auto env =
            sample_brownian_environment(d.env_seed, s.grid_half_width + pad, d.env_step);
        PiecewiseLinearDrift pl{env.x, {}};
        pl.b.resize(env.value.size());
        for (std::size_t i = 0; i < env.value.size(); ++i) pl.b[i] = d.env_scale * env.value[i];
        return pl;
    }
    if (d.kind == "csv") {
        auto rows = detail::read_two_column_csv(d.csv_path);
        PiecewiseLinearDrift pl;
        pl.x.resize(rows.size());
        pl.b.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            pl.x[i] = rows[i].first;
            pl.b[i] = rows[i].second;
        }
        return pl;
    }
    if (d.kind == "explicit_potential") {
        if (d.form == "zero") return ExplicitSigmaPotential{[](double) { return 0.0; }};
        if (d.form == "sin") return ExplicitSigmaPotential{[](double x) { return std::sin(x); }};
        if (d.form == "linear") return ExplicitSigmaPotential{[](double x) { return x; }};
        throw Error("unknown explicit potential form: " + d.form);
    }
    throw Error("unknown drift kind: " + d.kind);
}

inline std::function<double(double)> make_pointwise_g(const GammaSpec& g) {
    const double scale = g.g_scale;
    if (g.g_name == "identity") return [scale](double x) { return scale * x; };
    if (g.g_name == "tanh") return [scale](double x) { return scale * std::tanh(x); };
    if (g.g_name == "sin") return [scale](double x) { return scale * std::sin(x); };
    if (g.g_name == "constant") return [scale](double) { return scale; };
    throw Error("unknown pointwise map: " + g.g_name);
}

inline PathFunctional make_gamma(const Scenario& s) {
    const auto& g = s.gamma;
    PathFunctional f;
    if (g.kind == "zero") {
        f = PathFunctional::zero();
    } else if (g.kind == "instantaneous") {
        f = PathFunctional::instantaneous(make_pointwise_g(g), "instantaneous:" + g.g_name);
    } else if (g.kind == "delay") {
        f = PathFunctional::delay(g.lag, make_pointwise_g(g), "delay:" + g.g_name);
    } else if (g.kind == "running_max") {
        f = PathFunctional::running_max(make_pointwise_g(g), "running-max:" + g.g_name);
    } else if (g.kind == "integral_average") {
        f = PathFunctional::integral_average(make_pointwise_g(g),
                                             "integral-average:" + g.g_name);
    } else {
        throw Error("unknown gamma kind: " + g.kind);
    }
    f.growth_K = g.growth_k;
    f.lipschitz_K = g.lipschitz_k;
    f.gamma_at_zero_sup = g.sup_at_zero;
    return f;
}

struct BuiltArtifacts {
    CoefficientSet coeffs;
    SigmaTable table;
    HarmonicMap map;
    NonExplosionReport non_explosion;
};

inline BuiltArtifacts build_artifacts(const Scenario& s) {
    BuiltArtifacts a;
    a.coeffs.sigma = make_sigma(s);
    a.coeffs.drift = make_drift(s);
    a.coeffs.mollifier_scale = s.mollifier_scale;
    a.coeffs.eval_grid = UniformGrid(-s.grid_half_width, s.grid_half_width, s.grid_dx);
    SigmaBuildOptions opt;
    opt.quadrature_tolerance = s.quadrature_tolerance;
    opt.convergence_threshold = s.convergence_threshold;
    a.table = build_sigma_table(a.coeffs, opt);
    a.map = build_h(a.table, a.coeffs);
    a.non_explosion = check_non_explosion(a.table, s.non_explosion_floor);
    return a;
}

}  // namespace distdrift
