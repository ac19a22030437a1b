// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "qkdfl/quantize.hpp"

namespace qkdfl {

/// Raised when key material for a requested (round, pair) is unavailable.
struct KeyExhaustionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Raised when (round, pair) material would be consumed a second time.
struct SingleUseViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/**
 * @brief Symmetric per-round key material for one client pair.
 *
 * The payload is M*q key bits packed big-endian; coordinate k occupies bit
 * positions [k*q, (k+1)*q) of the stream and is read as an unsigned q-bit
 * residue. Material for (i, j) and (j, i) is the same object (the pair is
 * stored with lo < hi).
 */
struct PairKeyMaterial {
    uint32_t round = 0;
    uint16_t lo = 0;
    uint16_t hi = 0;
    int q = 8;
    uint32_t m = 0;                // coordinate count M
    std::vector<uint8_t> bits;     // ceil(M*q/8) bytes, big-endian packed

    /// Unpack the payload into M unsigned q-bit residues.
    [[nodiscard]] std::vector<uint64_t> residues() const;

    static PairKeyMaterial from_residues(uint32_t round, uint16_t a,
                                         uint16_t b, int q,
                                         std::span<const uint64_t> residues);
};

/// Masked q-bit update uploaded by one client; every residue is in [0, 2^q).
struct MaskedUpdate {
    uint32_t round = 0;
    uint16_t client = 0;
    int q = 8;
    std::vector<uint64_t> residues;
};

/// Lookup used by derive_mask_vector: pair (i<j) -> key material.
using PairKeyLookup =
    std::function<const PairKeyMaterial&(uint16_t lo, uint16_t hi)>;

/**
 * Build client i's additive mask over the selected set: the signed sum of
 * pairwise key residues, +QK_{i,j} when i < j and -QK_{i,j} when i > j.
 * Signs are antisymmetric within each pair, so masks cancel mod 2^q in the
 * aggregate. Arithmetic stays in signed 64-bit integers; reduction mod 2^q
 * happens once, in mask_update.
 */
std::vector<int64_t> derive_mask_vector(uint16_t client,
                                        std::span<const uint16_t> selected,
                                        size_t m, int q,
                                        const PairKeyLookup& keys);

/// residues[k] = (levels[k] + mask[k]) mod 2^q.
MaskedUpdate mask_update(std::span<const int64_t> levels,
                         std::span<const int64_t> mask, int q, uint32_t round,
                         uint16_t client);

/**
 * Server-side aggregation: sum masked residues mod 2^q and decode to signed
 * levels. `expected_clients` is the selected set; if the submissions do not
 * match it exactly the round is aborted (masks would not cancel).
 */
std::vector<int64_t> aggregate(std::span<const MaskedUpdate> updates,
                               std::span<const uint16_t> expected_clients);

/**
 * @brief Accounting of key-bit consumption, serialized across threads.
 *
 * One round with selection size S consumes S(S-1)/2 * M * q bits. Totals are
 * exposed in bits and MiB (2^20 bytes).
 */
class KeyLedger {
  public:
    struct RoundEntry {
        uint32_t round = 0;
        uint64_t pairs = 0;
        uint64_t bits = 0;
        uint64_t cumulative_bits = 0;
    };

    /// Charge one round; returns the bits consumed.
    uint64_t charge(uint32_t round, size_t selected, size_t m, int q);

    [[nodiscard]] uint64_t total_bits() const;
    [[nodiscard]] double total_mib() const;
    [[nodiscard]] std::vector<RoundEntry> entries() const;
    /// JSON array of {round, pairs, bits, cumulative_bits}.
    [[nodiscard]] std::string to_json() const;

    static uint64_t bits_for(size_t selected, size_t m, int q);
    static double mib_for(size_t selected, size_t m, int q);

  private:
    mutable std::mutex mutex_;
    std::vector<RoundEntry> entries_;
    uint64_t total_ = 0;
};

/// Key-material file format: magic "QNQK", version u8, round u32, pair
/// (u16, u16), q u8, M u32, then the packed payload. Multi-byte header
/// fields are big-endian.
void write_key_material(const std::filesystem::path& path,
                        const PairKeyMaterial& material);
PairKeyMaterial read_key_material(const std::filesystem::path& path);

} // namespace qkdfl
