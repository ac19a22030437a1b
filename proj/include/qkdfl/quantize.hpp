// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace qkdfl {

/**
 * @brief Configuration of the symmetric q-bit quantizer over [-beta, beta].
 *
 * A scalar is mapped to a signed integer level in
 * [-(2^{q-1}-1), 2^{q-1}-1]. `headroom` reserves integer levels at the top
 * of the range so that a sum of several quantized terms (each rounded, so
 * each up to 1/2 level above its exact value) still decodes without wrapping
 * past the representable window.
 */
struct QuantConfig {
    int q = 8;            // bit width, 2..32
    double beta = 1.0;    // clip bound
    int64_t headroom = 0; // reserved levels

    /// Largest representable magnitude, 2^{q-1}-1.
    [[nodiscard]] int64_t max_level() const {
        return (int64_t{1} << (q - 1)) - 1;
    }
    /// Level that beta maps to: 2^{q-1}-1-headroom.
    [[nodiscard]] int64_t scale_level() const { return max_level() - headroom; }
    /// Effective step size delta'_q = beta / scale_level().
    [[nodiscard]] double step() const {
        return beta / static_cast<double>(scale_level());
    }
    /// Throws std::invalid_argument if the invariants do not hold.
    void validate() const;
};

/// Clamp s into [-beta, beta].
double clip(double s, double beta);

/// Quantize a clipped scalar: sgn(s) * Round(|s| * scale_level / beta),
/// rounding halves away from zero. Requires |s| <= beta and finite s.
int64_t quantize_scalar(double s, const QuantConfig& cfg);

/// Inverse map: sgn(v) * |v| * beta / scale_level. Accepts any level with
/// |v| <= 2^{q-1}-1 (aggregates may land in the headroom region).
double dequantize_scalar(int64_t v, const QuantConfig& cfg);

/// Interpret an unsigned q-bit residue as a signed level:
/// u if u <= 2^{q-1}-1, else u - 2^q.
int64_t decode_residue(uint64_t u, int q);

std::vector<int64_t> quantize_vector(std::span<const double> v,
                                     const QuantConfig& cfg);
std::vector<double> dequantize_vector(std::span<const int64_t> v,
                                      const QuantConfig& cfg);

} // namespace qkdfl
