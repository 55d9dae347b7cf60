// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "distdrift/coefficients.hpp"
#include "distdrift/errors.hpp"
#include "distdrift/harmonic.hpp"
#include "distdrift/simulate.hpp"
#include "distdrift/verify.hpp"
#include "distdrift/version.hpp"

namespace distdrift {

// ---------------------------------------------------------------------------
// Transform tables: x, Sigma, h, h', sigma0(h(x)) as full-precision CSV.
// ---------------------------------------------------------------------------
inline void write_tables_csv(const std::filesystem::path& path, const SigmaTable& table,
                             const HarmonicMap& map) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << "x,Sigma,h,h_prime,sigma0_of_h\n";
    char buf[512];
    for (std::size_t i = 0; i < table.grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", table.grid.node(i),
                      table.values[i], map.h_values()[i], map.hprime_values()[i],
                      map.sigma0(map.h_values()[i]));
        f << buf;
    }
}

// ---------------------------------------------------------------------------
// Ensemble dump. 16-byte header: magic "DDRIFT01", u16 version, u16 n_steps,
// u32 n_paths; then a fixed metadata block and little-endian 64-bit floats:
// times, then per path x nodes, y nodes, increments and the weight.
// ---------------------------------------------------------------------------
inline constexpr char kEnsembleMagic[9] = "DDRIFT01";
inline constexpr std::uint16_t kEnsembleVersion = 1;

inline void write_ensemble_binary(const std::filesystem::path& path, const PathEnsemble& e) {
    if (e.n_steps > 0xffff) throw Error("binary format caps n_steps at 65535");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    const auto put = [&](const void* p, std::size_t n) {
        f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    put(kEnsembleMagic, 8);
    const auto version = kEnsembleVersion;
    const auto steps16 = static_cast<std::uint16_t>(e.n_steps);
    const auto paths32 = static_cast<std::uint32_t>(e.n_paths);
    put(&version, 2);
    put(&steps16, 2);
    put(&paths32, 4);
    const std::uint64_t seed = e.seed;
    const std::uint8_t scheme = e.scheme == Scheme::TransformedEuler ? 0 : 1;
    const std::uint8_t pad[7] = {};
    put(&e.t_horizon, 8);
    put(&e.x0, 8);
    put(&seed, 8);
    put(&scheme, 1);
    put(pad, 7);
    put(e.times.data(), e.times.size() * 8);
    for (std::size_t i = 0; i < e.n_paths; ++i) {
        put(e.x_path(i).data(), (e.n_steps + 1) * 8);
        put(e.y_path(i).data(), (e.n_steps + 1) * 8);
        put(e.increments(i).data(), e.n_steps * 8);
        put(&e.weights[i], 8);
    }
    if (!f) throw Error("short write on " + path.string());
}

inline PathEnsemble read_ensemble_binary(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open ensemble file: " + path.string());
    const auto get = [&](void* p, std::size_t n) {
        f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!f) throw Error("truncated ensemble file: " + path.string());
    };
    char magic[8];
    get(magic, 8);
    if (std::memcmp(magic, kEnsembleMagic, 8) != 0)
        throw Error("bad magic in " + path.string());
    std::uint16_t version = 0, steps16 = 0;
    std::uint32_t paths32 = 0;
    get(&version, 2);
    get(&steps16, 2);
    get(&paths32, 4);
    if (version != kEnsembleVersion)
        throw Error("unsupported ensemble version " + std::to_string(version));

    PathEnsemble e;
    e.n_steps = steps16;
    e.n_paths = paths32;
    std::uint64_t seed = 0;
    std::uint8_t scheme = 0;
    std::uint8_t pad[7];
    get(&e.t_horizon, 8);
    get(&e.x0, 8);
    get(&seed, 8);
    get(&scheme, 1);
    get(pad, 7);
    e.seed = seed;
    e.scheme = scheme == 0 ? Scheme::TransformedEuler : Scheme::GirsanovWeighted;
    e.times.resize(e.n_steps + 1);
    get(e.times.data(), e.times.size() * 8);
    e.x_paths.resize(e.n_paths * (e.n_steps + 1));
    e.y_paths.resize(e.n_paths * (e.n_steps + 1));
    e.w_increments.resize(e.n_paths * e.n_steps);
    e.weights.resize(e.n_paths);
    for (std::size_t i = 0; i < e.n_paths; ++i) {
        get(e.x_paths.data() + i * (e.n_steps + 1), (e.n_steps + 1) * 8);
        get(e.y_paths.data() + i * (e.n_steps + 1), (e.n_steps + 1) * 8);
        get(e.w_increments.data() + i * e.n_steps, e.n_steps * 8);
        get(&e.weights[i], 8);
    }
    return e;
}

// Long-format CSV (path_id, t, X, Y, weight), capped at `max_paths` paths.
inline void write_ensemble_csv(const std::filesystem::path& path, const PathEnsemble& e,
                               std::size_t max_paths) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << "path_id,t,X,Y,weight\n";
    char buf[512];
    const std::size_t count = std::min(max_paths, e.n_paths);
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = e.x_path(i), y = e.y_path(i);
        for (std::size_t k = 0; k <= e.n_steps; ++k) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, e.times[k],
                          x[k], y[k], e.weights[i]);
            f << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------
inline nlohmann::json report_to_json(const VerificationReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows) {
        nlohmann::json jr{{"name", row.name},
                          {"statistic", row.statistic},
                          {"stderr", row.stderr_},
                          {"pass", row.pass}};
        jr["z"] = std::isfinite(row.z) ? nlohmann::json(row.z) : nlohmann::json(nullptr);
        rows.push_back(std::move(jr));
    }
    return nlohmann::json{{"test", r.test_name}, {"flag", to_string(r.flag)},
                          {"seed", r.seed},      {"n_paths", r.n_paths},
                          {"notes", r.notes},    {"rows", std::move(rows)}};
}

inline std::string report_table(const std::vector<VerificationReport>& reports) {
    std::string out;
    char buf[512];
    for (const auto& r : reports) {
        std::snprintf(buf, sizeof buf, "== %-36s %s  (seed %llu, N=%zu)\n", r.test_name.c_str(),
                      to_string(r.flag), static_cast<unsigned long long>(r.seed), r.n_paths);
        out += buf;
        for (const auto& row : r.rows) {
            if (std::isfinite(row.z))
                std::snprintf(buf, sizeof buf, "   %-56s stat=% .4e se=%.3e z=% 7.2f %s\n",
                              row.name.c_str(), row.statistic, row.stderr_, row.z,
                              row.pass ? "ok" : "FAIL");
            else
                std::snprintf(buf, sizeof buf, "   %-56s stat=% .4e %s\n", row.name.c_str(),
                              row.statistic, row.pass ? "ok" : "FAIL");
            out += buf;
        }
        if (!r.notes.empty()) {
            out += "   note: " + r.notes + "\n";
        }
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << content;
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open " + path.string());
    nlohmann::json j;
    f >> j;
    return j;
}

}  // namespace distdrift
