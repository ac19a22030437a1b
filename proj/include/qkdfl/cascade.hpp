// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "qkdfl/rng.hpp"

namespace qkdfl {

/// A pair of raw keys plus simulation bookkeeping (where the channel flipped
/// bits). Keys are stored one bit per byte.
struct RawKeyPair {
    std::vector<uint8_t> key_a;
    std::vector<uint8_t> key_b;
    std::vector<uint32_t> true_error_positions;
};

struct CascadeConfig {
    int rounds = 4;
    double block_ratio = 0.7; // initial block length = round(ratio / e_est)
    int growth = 2;
    uint64_t shuffle_seed = 0; // stands in for pre-shared randomness
};

/// Generate a random key of length n and a copy with i.i.d. bit flips at
/// probability e. Deterministic under the rng state.
RawKeyPair inject_errors(size_t n, double e, Rng& rng);

/// Flip bits of an existing key (same contract, caller supplies key_a).
RawKeyPair inject_errors(const std::vector<uint8_t>& key, double e, Rng& rng);

struct ReconcileResult {
    std::vector<uint8_t> key;  // corrected copy of the remote key
    uint64_t leakage_bits = 0; // every disclosed parity
    bool success = false;      // keys identical at the end
    uint64_t corrections = 0;
    double f_efficiency = 0.0; // leakage / (n * H(e_est)); 0 when e_est = 0
};

/**
 * @brief Cascade information reconciliation.
 *
 * Four passes over the key with block length round(0.7/e) doubling each
 * round. Pass 1 compares block parities and fixes odd blocks by binary
 * search; later passes shuffle with seeded permutations first. Every
 * correction toggles the parity state of the blocks containing that bit in
 * all earlier rounds, and any block left odd is re-queued (smallest block
 * first) until the queue drains. Leakage counts every disclosed parity.
 */
ReconcileResult cascade_reconcile(const RawKeyPair& pair, double e_est,
                                  const CascadeConfig& cfg);

} // namespace qkdfl
