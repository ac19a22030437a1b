// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>

#include "qkdfl/rng.hpp"
#include "qkdfl/secure_agg.hpp"

namespace qkdfl {

/**
 * @brief Source of symmetric pair keys, one-time-use enforced.
 *
 * take() hands out the material for (round, pair) exactly once; a second
 * request for the same (round, pair) throws SingleUseViolation.
 */
class KeyProvider {
  public:
    virtual ~KeyProvider() = default;
    virtual PairKeyMaterial take(uint32_t round, uint16_t a, uint16_t b,
                                 size_t m, int q) = 0;

  protected:
    void mark_consumed(uint32_t round, uint16_t lo, uint16_t hi);

  private:
    std::mutex mutex_;
    std::set<std::tuple<uint32_t, uint16_t, uint16_t>> consumed_;
};

/// Seeded pseudo-random residues; both ends of a pair derive identical
/// material by construction. Used for large-scale runs where no key files
/// exist.
class SimulatedKeyProvider final : public KeyProvider {
  public:
    explicit SimulatedKeyProvider(uint64_t seed) : seed_(seed) {}
    PairKeyMaterial take(uint32_t round, uint16_t a, uint16_t b, size_t m,
                         int q) override;

  private:
    uint64_t seed_;
};

/// Pools of real key bits loaded from key-material files, consumed
/// sequentially per pair. Runs out -> KeyExhaustionError with a budget
/// summary in the message.
class FileKeyProvider final : public KeyProvider {
  public:
    explicit FileKeyProvider(const std::filesystem::path& directory);
    PairKeyMaterial take(uint32_t round, uint16_t a, uint16_t b, size_t m,
                         int q) override;

    [[nodiscard]] uint64_t remaining_bits(uint16_t a, uint16_t b) const;

  private:
    struct Pool {
        std::vector<uint8_t> bits; // one entry per key bit, 0/1
        size_t cursor = 0;
    };
    std::map<std::pair<uint16_t, uint16_t>, Pool> pools_;
    std::mutex pool_mutex_;
};

std::unique_ptr<KeyProvider> make_key_provider(const std::string& kind,
                                               uint64_t seed,
                                               const std::string& key_dir);

} // namespace qkdfl
