// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qkdfl/quantize.hpp"
#include "qkdfl/rng.hpp"

using namespace qkdfl;

namespace {
const QuantConfig kQ8{8, 1.0, 0};
}

TEST_CASE("clip clamps into [-beta, beta]") {
    CHECK(clip(0.5, 1.0) == 0.5);
    CHECK(clip(2.0, 1.0) == 1.0);
    CHECK(clip(-3.7, 1.0) == -1.0);
    CHECK_THROWS_AS(clip(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("quantize_scalar matches the sign-magnitude rounding rule") {
    CHECK(quantize_scalar(0.0, kQ8) == 0);
    CHECK(quantize_scalar(1.0, kQ8) == 127);
    CHECK(quantize_scalar(-1.0, kQ8) == -127);
    CHECK(quantize_scalar(0.3, kQ8) == 38); // Round(0.3 * 127) = Round(38.1)
    CHECK_THROWS_AS(quantize_scalar(std::nan(""), kQ8), std::domain_error);
    CHECK_THROWS_AS(quantize_scalar(1.5, kQ8), std::domain_error);
}

TEST_CASE("dequantize_scalar inverts the scale") {
    CHECK(dequantize_scalar(127, kQ8) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dequantize_scalar(0, kQ8) == 0.0);
    CHECK(dequantize_scalar(38, kQ8) ==
          doctest::Approx(0.2992125984251969).epsilon(1e-14));
    CHECK_THROWS_AS(dequantize_scalar(128, kQ8), std::domain_error);
}

TEST_CASE("decode_residue applies the wraparound adjustment") {
    CHECK(decode_residue(5, 8) == 5);
    CHECK(decode_residue(255, 8) == -1);
    CHECK(decode_residue(128, 8) == -128);
    CHECK(decode_residue(127, 8) == 127);
    CHECK_THROWS_AS(decode_residue(256, 8), std::domain_error);
}

TEST_CASE("vector ops lift the scalar maps and reject empty input") {
    const QuantConfig cfg{8, 2.0, 3};
    const int64_t top = cfg.scale_level();
    const std::vector<double> v{0.0, cfg.beta, -cfg.beta};
    const auto levels = quantize_vector(v, cfg);
    CHECK(levels == std::vector<int64_t>{0, top, -top});
    CHECK_THROWS_AS(quantize_vector(std::vector<double>{}, cfg),
                    std::domain_error);
    CHECK_THROWS_AS(dequantize_vector(std::vector<int64_t>{}, cfg),
                    std::domain_error);
}

TEST_CASE("round trip stays within half a step") {
    Rng rng(42);
    for (const int q : {8, 16, 32}) {
        for (const int64_t headroom : {int64_t{0}, int64_t{2}}) {
            const QuantConfig cfg{q, 1.5, headroom};
            const double half_step = 0.5 * cfg.step() * (1.0 + 1e-9);
            for (int i = 0; i < 20000; ++i) {
                const double s = rng.uniform(-cfg.beta, cfg.beta);
                const double back = dequantize_scalar(quantize_scalar(s, cfg),
                                                      cfg);
                CHECK(std::abs(back - s) <= half_step);
            }
        }
    }
}

TEST_CASE("odd symmetry and monotonicity") {
    Rng rng(7);
    const QuantConfig cfg{12, 1.0, 1};
    double prev_s = -1.0;
    int64_t prev_level = quantize_scalar(prev_s, cfg);
    for (int i = 0; i < 5000; ++i) {
        const double s = rng.uniform(-1.0, 1.0);
        CHECK(quantize_scalar(-s, cfg) == -quantize_scalar(s, cfg));
        // monotone over a sorted sweep
        const double t = -1.0 + 2.0 * (i + 1.0) / 5001.0;
        const int64_t level = quantize_scalar(t, cfg);
        CHECK(prev_s <= t);
        CHECK(prev_level <= level);
        prev_s = t;
        prev_level = level;
    }
}

TEST_CASE("decode_residue inverts mod-2^q encoding on the signed window") {
    for (const int q : {4, 8, 16}) {
        const int64_t half = int64_t{1} << (q - 1);
        const uint64_t wrap = uint64_t{1} << q;
        for (int64_t level = -half; level < half; ++level) {
            const uint64_t residue = static_cast<uint64_t>(level) & (wrap - 1);
            CHECK(decode_residue(residue, q) == level);
        }
    }
}

TEST_CASE("quantization noise is centered and supported inside one step") {
    const QuantConfig cfg{8, 1.0, 0};
    Rng rng(2024);
    const int n = 100000;
    const double step = cfg.step();
    double sum = 0.0;
    double max_abs = 0.0;
    for (int i = 0; i < n; ++i) {
        const double s = rng.uniform(-cfg.beta, cfg.beta);
        const double noise = dequantize_scalar(quantize_scalar(s, cfg), cfg) - s;
        sum += noise;
        max_abs = std::max(max_abs, std::abs(noise));
        CHECK(std::abs(noise) < step);
    }
    // mean within 3 sigma / sqrt(n) of zero for U(-d/2, d/2)-like noise
    const double sigma = step / std::sqrt(12.0);
    CHECK(std::abs(sum / n) <= 3.0 * sigma / std::sqrt(static_cast<double>(n)));
    CHECK(max_abs < step);
}
