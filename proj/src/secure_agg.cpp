// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/secure_agg.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qkdfl {

namespace {

// MSB-first bit packing helpers.
class BitWriter {
  public:
    explicit BitWriter(size_t bit_capacity)
        : bytes_((bit_capacity + 7) / 8, 0) {}

    void push(uint64_t value, int width) {
        for (int b = width - 1; b >= 0; --b) {
            if ((value >> b) & 1ULL) {
                bytes_[pos_ / 8] |= static_cast<uint8_t>(0x80U >> (pos_ % 8));
            }
            ++pos_;
        }
    }

    std::vector<uint8_t> take() { return std::move(bytes_); }

  private:
    std::vector<uint8_t> bytes_;
    size_t pos_ = 0;
};

uint64_t read_bits(const std::vector<uint8_t>& bytes, size_t bit_offset,
                   int width) {
    uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
        const size_t pos = bit_offset + static_cast<size_t>(b);
        const uint64_t bit = (bytes[pos / 8] >> (7 - pos % 8)) & 1U;
        v = (v << 1) | bit;
    }
    return v;
}

uint64_t mod_pow2(int64_t value, int q) {
    const uint64_t mask = (q == 64) ? ~uint64_t{0} : (uint64_t{1} << q) - 1;
    return static_cast<uint64_t>(value) & mask; // two's complement wrap
}

} // namespace

std::vector<uint64_t> PairKeyMaterial::residues() const {
    std::vector<uint64_t> out(m);
    for (uint32_t k = 0; k < m; ++k) {
        out[k] = read_bits(bits, static_cast<size_t>(k) * q, q);
    }
    return out;
}

PairKeyMaterial PairKeyMaterial::from_residues(
    uint32_t round, uint16_t a, uint16_t b, int q,
    std::span<const uint64_t> residues) {
    if (a == b) {
        throw std::invalid_argument("PairKeyMaterial: pair indices equal");
    }
    PairKeyMaterial mat;
    mat.round = round;
    mat.lo = std::min(a, b);
    mat.hi = std::max(a, b);
    mat.q = q;
    mat.m = static_cast<uint32_t>(residues.size());
    BitWriter w(residues.size() * static_cast<size_t>(q));
    for (const uint64_t r : residues) {
        if (r >= (uint64_t{1} << q)) {
            throw std::invalid_argument("PairKeyMaterial: residue exceeds q bits");
        }
        w.push(r, q);
    }
    mat.bits = w.take();
    return mat;
}

std::vector<int64_t> derive_mask_vector(uint16_t client,
                                        std::span<const uint16_t> selected,
                                        size_t m, int q,
                                        const PairKeyLookup& keys) {
    if (std::find(selected.begin(), selected.end(), client) ==
        selected.end()) {
        throw std::invalid_argument(
            "derive_mask_vector: client not in selected set");
    }
    std::vector<int64_t> mask(m, 0);
    for (const uint16_t other : selected) {
        if (other == client) {
            continue;
        }
        const uint16_t lo = std::min(client, other);
        const uint16_t hi = std::max(client, other);
        const PairKeyMaterial& mat = keys(lo, hi);
        if (mat.m != m || mat.q != q) {
            throw std::invalid_argument(
                "derive_mask_vector: key material shape mismatch");
        }
        const int64_t sign = client < other ? 1 : -1;
        const std::vector<uint64_t> res = mat.residues();
        for (size_t k = 0; k < m; ++k) {
            // Raw residues carry the same value mod 2^q as their signed
            // decoding, and the mask only ever matters mod 2^q.
            mask[k] += sign * static_cast<int64_t>(res[k]);
        }
    }
    return mask;
}

MaskedUpdate mask_update(std::span<const int64_t> levels,
                         std::span<const int64_t> mask, int q, uint32_t round,
                         uint16_t client) {
    if (levels.size() != mask.size()) {
        throw std::invalid_argument("mask_update: length mismatch");
    }
    MaskedUpdate out;
    out.round = round;
    out.client = client;
    out.q = q;
    out.residues.resize(levels.size());
    for (size_t k = 0; k < levels.size(); ++k) {
        out.residues[k] = mod_pow2(levels[k] + mask[k], q);
    }
    return out;
}

std::vector<int64_t> aggregate(std::span<const MaskedUpdate> updates,
                               std::span<const uint16_t> expected_clients) {
    if (updates.empty()) {
        throw std::invalid_argument("aggregate: no updates");
    }
    std::vector<uint16_t> submitted;
    submitted.reserve(updates.size());
    for (const MaskedUpdate& u : updates) {
        submitted.push_back(u.client);
    }
    std::vector<uint16_t> expected(expected_clients.begin(),
                                   expected_clients.end());
    std::sort(submitted.begin(), submitted.end());
    std::sort(expected.begin(), expected.end());
    if (submitted != expected) {
        throw std::runtime_error(
            "aggregate: submissions do not match the selected set; "
            "round aborted (masks would not cancel)");
    }

    const int q = updates[0].q;
    const size_t m = updates[0].residues.size();
    const uint64_t mask = (uint64_t{1} << q) - 1;
    std::vector<uint64_t> sum(m, 0);
    for (const MaskedUpdate& u : updates) {
        if (u.q != q || u.residues.size() != m) {
            throw std::invalid_argument("aggregate: update shape mismatch");
        }
        for (size_t k = 0; k < m; ++k) {
            sum[k] += u.residues[k];
        }
    }
    std::vector<int64_t> out(m);
    for (size_t k = 0; k < m; ++k) {
        out[k] = decode_residue(sum[k] & mask, q);
    }
    return out;
}

uint64_t KeyLedger::bits_for(size_t selected, size_t m, int q) {
    if (selected == 0) {
        throw std::invalid_argument("KeyLedger: empty selection");
    }
    const uint64_t pairs =
        static_cast<uint64_t>(selected) * (selected - 1) / 2;
    return pairs * static_cast<uint64_t>(m) * static_cast<uint64_t>(q);
}

double KeyLedger::mib_for(size_t selected, size_t m, int q) {
    return static_cast<double>(bits_for(selected, m, q)) / 8.0 / 1048576.0;
}

uint64_t KeyLedger::charge(uint32_t round, size_t selected, size_t m, int q) {
    const uint64_t bits = bits_for(selected, m, q);
    const uint64_t pairs =
        static_cast<uint64_t>(selected) * (selected - 1) / 2;
    std::lock_guard lock(mutex_);
    total_ += bits;
    entries_.push_back({round, pairs, bits, total_});
    return bits;
}

uint64_t KeyLedger::total_bits() const {
    std::lock_guard lock(mutex_);
    return total_;
}

double KeyLedger::total_mib() const {
    return static_cast<double>(total_bits()) / 8.0 / 1048576.0;
}

std::vector<KeyLedger::RoundEntry> KeyLedger::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::string KeyLedger::to_json() const {
    std::ostringstream os;
    os << "[";
    bool first = true;
    for (const RoundEntry& e : entries()) {
        if (!first) {
            os << ",";
        }
        first = false;
        os << "{\"round\":" << e.round << ",\"pairs\":" << e.pairs
           << ",\"bits\":" << e.bits
           << ",\"cumulative_bits\":" << e.cumulative_bits << "}";
    }
    os << "]";
    return os.str();
}

namespace {

constexpr char kMagic[4] = {'Q', 'N', 'Q', 'K'};
constexpr uint8_t kVersion = 1;

void put_u32(std::ostream& os, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v >> 24),
                          static_cast<uint8_t>(v >> 16),
                          static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ostream& os, uint16_t v) {
    const uint8_t b[2] = {static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

uint32_t get_u32(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) |
           (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

uint16_t get_u16(std::istream& is) {
    uint8_t b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>((uint16_t{b[0]} << 8) | uint16_t{b[1]});
}

} // namespace

void write_key_material(const std::filesystem::path& path,
                        const PairKeyMaterial& material) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("write_key_material: cannot open " +
                                 path.string());
    }
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    put_u32(os, material.round);
    put_u16(os, material.lo);
    put_u16(os, material.hi);
    os.put(static_cast<char>(material.q));
    put_u32(os, material.m);
    const size_t expect =
        (static_cast<size_t>(material.m) * material.q + 7) / 8;
    if (material.bits.size() != expect) {
        throw std::invalid_argument("write_key_material: payload size mismatch");
    }
    os.write(reinterpret_cast<const char*>(material.bits.data()),
             static_cast<std::streamsize>(material.bits.size()));
    if (!os) {
        throw std::runtime_error("write_key_material: write failed");
    }
}

PairKeyMaterial read_key_material(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("read_key_material: cannot open " +
                                 path.string());
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw std::runtime_error("read_key_material: bad magic in " +
                                 path.string());
    }
    const int version = is.get();
    if (version != kVersion) {
        throw std::runtime_error("read_key_material: unsupported version");
    }
    PairKeyMaterial mat;
    mat.round = get_u32(is);
    mat.lo = get_u16(is);
    mat.hi = get_u16(is);
    mat.q = is.get();
    mat.m = get_u32(is);
    if (!is || mat.q < 2 || mat.q > 32 || mat.lo >= mat.hi) {
        throw std::runtime_error("read_key_material: malformed header");
    }
    const size_t payload = (static_cast<size_t>(mat.m) * mat.q + 7) / 8;
    mat.bits.resize(payload);
    is.read(reinterpret_cast<char*>(mat.bits.data()),
            static_cast<std::streamsize>(payload));
    if (static_cast<size_t>(is.gcount()) != payload) {
        throw std::runtime_error("read_key_material: truncated payload");
    }
    return mat;
}

} // namespace qkdfl
