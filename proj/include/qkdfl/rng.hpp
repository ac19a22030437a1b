// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace qkdfl {

/**
 * @brief Deterministic random source with named substreams.
 *
 * Every run derives all of its randomness from a single 64-bit master seed.
 * Components pull independent substreams by name (e.g. "subset-selection",
 * "shuffle", "haar"), so any one of them can be re-seeded or replayed without
 * disturbing the others. All sampling helpers are implemented on top of the
 * raw 64-bit output, which keeps byte-identical reruns independent of the
 * standard library's distribution internals.
 */
class Rng {
  public:
    explicit Rng(uint64_t seed) : seed_(seed), engine_(seed) {}

    /// Derive an independent substream keyed by (this seed, name).
    [[nodiscard]] Rng stream(std::string_view name) const {
        return Rng(seed_ ^ fnv1a(name));
    }
    /// Derive an indexed substream, e.g. one per client or per state.
    [[nodiscard]] Rng stream(std::string_view name, uint64_t index) const {
        uint64_t h = fnv1a(name);
        h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return Rng(seed_ ^ h);
    }

    uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (portable across platforms).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925;
        spare_ = mag * std::sin(two_pi * u2);
        has_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    /// Unbiased uniform integer in [0, n).
    uint64_t below(uint64_t n) {
        if (n == 0) {
            throw std::invalid_argument("Rng::below: n must be positive");
        }
        uint64_t x, r;
        do {
            x = next_u64();
            r = x % n;
        } while (x - r > UINT64_MAX - (n - 1));
        return r;
    }

    bool bit() { return (next_u64() >> 63) != 0; }

    /// Fisher-Yates shuffle.
    template <typename T> void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

    std::vector<size_t> permutation(size_t n) {
        std::vector<size_t> p(n);
        for (size_t i = 0; i < n; ++i) {
            p[i] = i;
        }
        shuffle(p);
        return p;
    }

    [[nodiscard]] uint64_t seed() const { return seed_; }

  private:
    static uint64_t fnv1a(std::string_view s) {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (const char c : s) {
            h ^= static_cast<uint8_t>(c);
            h *= 0x100000001b3ULL;
        }
        return h;
    }

    uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qkdfl
