// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/key_provider.hpp"

#include <algorithm>
#include <sstream>

namespace qkdfl {

void KeyProvider::mark_consumed(uint32_t round, uint16_t lo, uint16_t hi) {
    std::lock_guard lock(mutex_);
    if (!consumed_.emplace(round, lo, hi).second) {
        std::ostringstream os;
        os << "key material for round " << round << " pair (" << lo << ","
           << hi << ") already consumed";
        throw SingleUseViolation(os.str());
    }
}

PairKeyMaterial SimulatedKeyProvider::take(uint32_t round, uint16_t a,
                                           uint16_t b, size_t m, int q) {
    const uint16_t lo = std::min(a, b);
    const uint16_t hi = std::max(a, b);
    mark_consumed(round, lo, hi);
    const uint64_t pair_tag =
        (uint64_t{round} << 32) | (uint64_t{lo} << 16) | uint64_t{hi};
    Rng rng = Rng(seed_).stream("pair-key", pair_tag);
    std::vector<uint64_t> residues(m);
    const uint64_t modulus = uint64_t{1} << q;
    for (size_t k = 0; k < m; ++k) {
        residues[k] = rng.below(modulus);
    }
    return PairKeyMaterial::from_residues(round, lo, hi, q, residues);
}

FileKeyProvider::FileKeyProvider(const std::filesystem::path& directory) {
    if (!std::filesystem::is_directory(directory)) {
        throw std::runtime_error("FileKeyProvider: not a directory: " +
                                 directory.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".qnqk") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        const PairKeyMaterial mat = read_key_material(file);
        Pool& pool = pools_[{mat.lo, mat.hi}];
        const size_t nbits = static_cast<size_t>(mat.m) * mat.q;
        for (size_t i = 0; i < nbits; ++i) {
            pool.bits.push_back((mat.bits[i / 8] >> (7 - i % 8)) & 1U);
        }
    }
}

PairKeyMaterial FileKeyProvider::take(uint32_t round, uint16_t a, uint16_t b,
                                      size_t m, int q) {
    const uint16_t lo = std::min(a, b);
    const uint16_t hi = std::max(a, b);
    mark_consumed(round, lo, hi);
    std::lock_guard lock(pool_mutex_);
    const auto it = pools_.find({lo, hi});
    const size_t need = m * static_cast<size_t>(q);
    if (it == pools_.end() || it->second.bits.size() - it->second.cursor < need) {
        std::ostringstream os;
        os << "key pool exhausted for pair (" << lo << "," << hi << "): need "
           << need << " bits, have "
           << (it == pools_.end() ? 0
                                  : it->second.bits.size() - it->second.cursor);
        throw KeyExhaustionError(os.str());
    }
    Pool& pool = it->second;
    std::vector<uint64_t> residues(m);
    for (size_t k = 0; k < m; ++k) {
        uint64_t v = 0;
        for (int bit = 0; bit < q; ++bit) {
            v = (v << 1) | pool.bits[pool.cursor++];
        }
        residues[k] = v;
    }
    return PairKeyMaterial::from_residues(round, lo, hi, q, residues);
}

uint64_t FileKeyProvider::remaining_bits(uint16_t a, uint16_t b) const {
    const auto it = pools_.find({std::min(a, b), std::max(a, b)});
    if (it == pools_.end()) {
        return 0;
    }
    return it->second.bits.size() - it->second.cursor;
}

std::unique_ptr<KeyProvider> make_key_provider(const std::string& kind,
                                               uint64_t seed,
                                               const std::string& key_dir) {
    if (kind == "simulated") {
        return std::make_unique<SimulatedKeyProvider>(seed);
    }
    if (kind == "real") {
        return std::make_unique<FileKeyProvider>(key_dir);
    }
    throw std::invalid_argument("unknown key provider kind: " + kind);
}

} // namespace qkdfl
