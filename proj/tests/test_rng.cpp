// Copyright 2026 the distdrift authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "distdrift/rng.hpp"

using namespace distdrift;

TEST_CASE("philox 4x32-10 reproduces the published verification vectors") {
    const auto zero = philox::block({0, 0}, {0, 0, 0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    const auto ones = philox::block({0xffffffffu, 0xffffffffu},
                                    {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    const auto pi = philox::block({0xa4093822u, 0x299f31d0u},
                                  {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u});
    CHECK(pi[0] == 0xd16cfe09u);
    CHECK(pi[1] == 0x94fdccebu);
    CHECK(pi[2] == 0x5001e420u);
    CHECK(pi[3] == 0x24126ea1u);
}

TEST_CASE("normal stream has standard moments") {
    const NormalStream stream(42, 0);
    const std::size_t n = 200000;
    double s = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::uint32_t k = 0; k < n; ++k) {
        const double z = stream.normal(0, k);
        s += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    const double mean = s / n, var = s2 / n, kurt = s4 / n;
    CHECK(std::fabs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
    CHECK(kurt == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("streams are reproducible and distinct across paths and substreams") {
    const NormalStream a(7, 3), b(7, 3), c(7, 4);
    CHECK(a.normal(0, 10) == b.normal(0, 10));
    CHECK(a.normal(0, 10) != c.normal(0, 10));
    CHECK(a.normal(0, 10) != a.normal(1, 10));
    const NormalStream other_seed(8, 3);
    CHECK(a.normal(0, 10) != other_seed.normal(0, 10));
}

TEST_CASE("bridge refinement preserves the coarse path") {
    const NormalStream stream(123, 5);
    const double T = 2.0;
    const std::size_t n = 16;
    const auto coarse = brownian_increments(stream, T, n, 0);
    const auto fine = brownian_increments(stream, T, n, 3);
    REQUIRE(fine.size() == n * 8);
    // node values at shared times agree across resolutions
    double wc = 0.0, wf = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        wc += coarse[k];
        for (std::size_t j = 0; j < 8; ++j) wf += fine[8 * k + j];
        CHECK(wf == doctest::Approx(wc).scale(1.0).epsilon(1e-13));
    }
    // refined increments have the right per-step scale
    double s2 = 0.0;
    for (const double d : fine) s2 += d * d;
    CHECK(s2 == doctest::Approx(T).epsilon(0.25));  // realized QV of the refined walk
}

TEST_CASE("environment sample is anchored, symmetric in layout, deterministic") {
    const auto env = sample_brownian_environment(9, 4.0, 0.25);
    const auto env2 = sample_brownian_environment(9, 4.0, 0.25);
    REQUIRE(env.x.size() == env.value.size());
    CHECK(env.value == env2.value);
    const std::size_t mid = env.x.size() / 2;
    CHECK(env.x[mid] == 0.0);
    CHECK(env.value[mid] == 0.0);
    CHECK(env.x.front() <= -4.0);
    CHECK(env.x.back() >= 4.0);
    // increment variance at the Brownian scale
    double s2 = 0.0;
    for (std::size_t i = 1; i < env.value.size(); ++i) {
        const double d = env.value[i] - env.value[i - 1];
        s2 += d * d;
    }
    const double per_step = s2 / static_cast<double>(env.value.size() - 1);
    CHECK(per_step == doctest::Approx(0.25).epsilon(0.5));
}
