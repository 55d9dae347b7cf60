// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <numbers>
#include <vector>

namespace distdrift {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011).
// A block is a pure function of (key, counter), so every draw in the library
// is addressable: ensembles are reproducible and independent of thread count.
namespace philox {

inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;
inline constexpr std::uint32_t kMultA = 0xD2511F53u;
inline constexpr std::uint32_t kMultB = 0xCD9E8D57u;

inline void round_once(std::array<std::uint32_t, 4>& ctr, std::array<std::uint32_t, 2>& key) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMultA) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMultB) * ctr[2];
    const auto lo0 = static_cast<std::uint32_t>(p0), hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1), hi1 = static_cast<std::uint32_t>(p1 >> 32);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeylA;
    key[1] += kWeylB;
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 2> key,
                                          std::array<std::uint32_t, 4> ctr) {
    for (int r = 0; r < 10; ++r) round_once(ctr, key);
    return ctr;
}

}  // namespace philox

inline double uniform_from_bits(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t u = (static_cast<std::uint64_t>(hi) << 32) | lo;
    // (0, 1]: safe as a log argument.
    return static_cast<double>((u >> 11) + 1) * 0x1.0p-53;
}

// Addressable N(0,1) stream for one simulated path. Substreams keep draw
// families apart (base increments, bridge levels, auxiliary uses).
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path_id)),
          path_hi_(static_cast<std::uint32_t>(path_id >> 32)) {}

    double normal(std::uint32_t substream, std::uint32_t index) const {
        const auto b = philox::block(key_, {path_lo_, path_hi_, substream, index});
        const double u1 = uniform_from_bits(b[0], b[1]);
        const double u2 = uniform_from_bits(b[2], b[3]);
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi_v<double> * u2);
    }

    double uniform(std::uint32_t substream, std::uint32_t index) const {
        const auto b = philox::block(key_, {path_lo_, path_hi_, substream, index});
        return uniform_from_bits(b[0], b[1]);
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint32_t path_lo_, path_hi_;
};

// Substream layout shared across the library.
namespace substream {
inline constexpr std::uint32_t kBrownianBase = 0;    // + level for bridge midpoints
inline constexpr std::uint32_t kEnvironment = 64;    // random-environment samples
inline constexpr std::uint32_t kBootstrap = 65;      // resampling draws
}  // namespace substream

// Brownian increments at resolution n_base * 2^level on [0, T]. Level 0 draws
// the coarse increments; each further level inserts bridge midpoints from its
// own substream, so refinements of one stream share the same underlying path:
// node values at common times are identical across levels.
inline std::vector<double> brownian_increments(const NormalStream& stream, double t_horizon,
                                               std::size_t n_base, std::uint32_t level) {
    const double dt0 = t_horizon / static_cast<double>(n_base);
    const double sqrt_dt0 = std::sqrt(dt0);
    std::vector<double> inc(n_base);
    for (std::size_t k = 0; k < n_base; ++k)
        inc[k] = sqrt_dt0 * stream.normal(substream::kBrownianBase, static_cast<std::uint32_t>(k));
    for (std::uint32_t l = 1; l <= level; ++l) {
        const std::size_t n = inc.size();
        const double dt = t_horizon / static_cast<double>(n);
        const double half_sd = 0.5 * std::sqrt(dt);
        std::vector<double> fine(2 * n);
        for (std::size_t j = 0; j < n; ++j) {
            // midpoint displacement of a Brownian bridge over one interval
            const double z = half_sd * stream.normal(substream::kBrownianBase + l,
                                                     static_cast<std::uint32_t>(j));
            fine[2 * j] = 0.5 * inc[j] + z;
            fine[2 * j + 1] = 0.5 * inc[j] - z;
        }
        inc.swap(fine);
    }
    return inc;
}

// Two-sided piecewise-linear random walk sample with Brownian scaling:
// B(0) = 0, increments N(0, step) on a symmetric uniform abscissa grid.
struct EnvironmentSample {
    std::vector<double> x;
    std::vector<double> value;
};

inline EnvironmentSample sample_brownian_environment(std::uint64_t env_seed, double half_width,
                                                     double step) {
    const auto n_side = static_cast<std::size_t>(std::ceil(half_width / step - 1e-9));
    const NormalStream stream(env_seed, 0);
    EnvironmentSample env;
    const std::size_t n = 2 * n_side + 1;
    env.x.resize(n);
    env.value.resize(n);
    const double sd = std::sqrt(step);
    env.x[n_side] = 0.0;
    env.value[n_side] = 0.0;
    for (std::size_t k = 0; k < n_side; ++k) {
        env.x[n_side + k + 1] = static_cast<double>(k + 1) * step;
        env.value[n_side + k + 1] =
            env.value[n_side + k] +
            sd * stream.normal(substream::kEnvironment, static_cast<std::uint32_t>(k));
        env.x[n_side - k - 1] = -static_cast<double>(k + 1) * step;
        env.value[n_side - k - 1] =
            env.value[n_side - k] +
            sd * stream.normal(substream::kEnvironment,
                               static_cast<std::uint32_t>(n_side + k));
    }
    return env;
}

}  // namespace distdrift
