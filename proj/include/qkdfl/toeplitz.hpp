// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qkdfl/cascade.hpp"
#include "qkdfl/qkd_rate.hpp"
#include "qkdfl/secure_agg.hpp"

namespace qkdfl {

/**
 * @brief Seed of the privacy-amplification hash.
 *
 * The (n-1)-bit string [v_0 .. v_{n-2}] defines an r x (n-r) Toeplitz block
 * V with V[i][j] = v[r-1-i+j]; the hash matrix is S = [I_r | V] over GF(2).
 */
struct ToeplitzSeed {
    std::vector<uint8_t> bits; // n-1 entries, one bit per byte
    size_t n = 0;              // raw key length
    size_t r = 0;              // output length, 0 < r < n

    void validate() const;
    static ToeplitzSeed random(size_t n, size_t r, Rng& rng);
};

/// Exact reference path: Y = S x over GF(2), evaluated as packed-word
/// AND/popcount row products.
std::vector<uint8_t> pa_direct(std::span<const uint8_t> x,
                               const ToeplitzSeed& seed);

/**
 * FFT fast path. The Toeplitz block is extended to an n x n circulant, the
 * first r entries of x are zeroed, and the product is a cyclic convolution
 * evaluated in the transform domain. Every rounded transform output must be
 * within 0.25 of an integer, otherwise the call falls back to pa_direct.
 */
std::vector<uint8_t> pa_fft(std::span<const uint8_t> x,
                            const ToeplitzSeed& seed);

/// True when the last pa_fft call on this thread used the exact fallback.
bool pa_fft_used_fallback();

struct PipelineResult {
    std::vector<uint8_t> final_key;
    ReconcileResult reconcile;
    bool emitted = false;
};

/**
 * Reconcile then compress: Cascade on the raw pair, then the Toeplitz hash
 * truncating to final_len bits. No key is emitted when reconciliation fails.
 */
PipelineResult postprocess_pipeline(const RawKeyPair& pair, double e_est,
                                    const CascadeConfig& cascade_cfg,
                                    size_t final_len, Rng& seed_rng);

} // namespace qkdfl
