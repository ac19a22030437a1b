// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/cascade.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>

#include "qkdfl/qkd_rate.hpp"

namespace qkdfl {

RawKeyPair inject_errors(size_t n, double e, Rng& rng) {
    std::vector<uint8_t> key(n);
    for (size_t i = 0; i < n; ++i) {
        key[i] = rng.bit() ? 1 : 0;
    }
    return inject_errors(key, e, rng);
}

RawKeyPair inject_errors(const std::vector<uint8_t>& key, double e, Rng& rng) {
    if (e < 0.0 || e >= 0.5) {
        throw std::invalid_argument("inject_errors: e must be in [0, 0.5)");
    }
    RawKeyPair pair;
    pair.key_a = key;
    pair.key_b = key;
    for (size_t i = 0; i < key.size(); ++i) {
        if (rng.uniform() < e) {
            pair.key_b[i] ^= 1;
            pair.true_error_positions.push_back(static_cast<uint32_t>(i));
        }
    }
    return pair;
}

namespace {

struct RoundLayout {
    std::vector<uint32_t> perm;     // perm[pos] = original index
    std::vector<uint32_t> starts;   // block start positions (permuted axis)
    std::vector<uint32_t> block_of; // original index -> block id
    std::vector<uint8_t> odd;       // parity mismatch flag per block
};

} // namespace

ReconcileResult cascade_reconcile(const RawKeyPair& pair, double e_est,
                                  const CascadeConfig& cfg) {
    const size_t n = pair.key_a.size();
    if (pair.key_b.size() != n || n == 0) {
        throw std::invalid_argument("cascade_reconcile: bad key pair");
    }
    if (!(e_est > 0.0) || e_est >= 0.5) {
        throw std::invalid_argument(
            "cascade_reconcile: e_est must be in (0, 0.5)");
    }
    if (cfg.rounds < 1 || cfg.growth < 1) {
        throw std::invalid_argument("cascade_reconcile: bad config");
    }

    ReconcileResult res;
    res.key = pair.key_b;
    const std::vector<uint8_t>& ref = pair.key_a;
    std::vector<uint8_t>& work = res.key;

    // diff[i] = ref[i] ^ work[i]; maintained so parities are O(range).
    std::vector<uint8_t> diff(n);
    for (size_t i = 0; i < n; ++i) {
        diff[i] = static_cast<uint8_t>(ref[i] ^ work[i]);
    }

    const auto base_len = static_cast<uint64_t>(
        std::llround(cfg.block_ratio / e_est));
    const uint64_t block0 = std::max<uint64_t>(2, base_len);

    std::vector<RoundLayout> rounds(cfg.rounds);
    uint64_t block_len = block0;
    for (int r = 0; r < cfg.rounds; ++r) {
        RoundLayout& layout = rounds[r];
        layout.perm.resize(n);
        for (size_t i = 0; i < n; ++i) {
            layout.perm[i] = static_cast<uint32_t>(i);
        }
        if (r > 0) {
            Rng shuffle_rng =
                Rng(cfg.shuffle_seed).stream("cascade-shuffle", r);
            shuffle_rng.shuffle(layout.perm);
        }
        const uint64_t len = std::min<uint64_t>(block_len, n);
        // Contiguous blocks on the permuted axis; a trailing fragment
        // shorter than len is absorbed into the preceding block.
        layout.block_of.resize(n);
        for (uint64_t s = 0; s < n; s += len) {
            const bool tail_short = n - s < len && !layout.starts.empty();
            if (!tail_short) {
                layout.starts.push_back(static_cast<uint32_t>(s));
            }
        }
        for (size_t pos = 0, b = 0; pos < n; ++pos) {
            if (b + 1 < layout.starts.size() && pos >= layout.starts[b + 1]) {
                ++b;
            }
            layout.block_of[layout.perm[pos]] = static_cast<uint32_t>(b);
        }
        layout.odd.assign(layout.starts.size(), 0);
        if (r + 1 < cfg.rounds) {
            block_len = block_len * static_cast<uint64_t>(cfg.growth);
        }
    }

    const auto block_range = [&](const RoundLayout& layout, uint32_t block)
        -> std::pair<uint32_t, uint32_t> {
        const uint32_t s = layout.starts[block];
        const uint32_t t = block + 1 < layout.starts.size()
                               ? layout.starts[block + 1]
                               : static_cast<uint32_t>(n);
        return {s, t};
    };

    const auto range_diff_parity = [&](const RoundLayout& layout, uint32_t s,
                                       uint32_t t) {
        uint8_t p = 0;
        for (uint32_t pos = s; pos < t; ++pos) {
            p ^= diff[layout.perm[pos]];
        }
        return p;
    };

    // (block length, round, block) min-heap: correcting small blocks first
    // keeps each disclosed parity as informative as possible.
    using QueueItem = std::tuple<uint32_t, int, uint32_t>;
    std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>>
        pending;

    const auto binary_correct = [&](int r, uint32_t block) {
        auto [s, t] = block_range(rounds[r], block);
        // Each level disclosing the first half's parity costs one bit.
        while (t - s > 1) {
            const uint32_t mid = s + (t - s + 1) / 2;
            ++res.leakage_bits;
            if (range_diff_parity(rounds[r], s, mid)) {
                t = mid;
            } else {
                s = mid;
            }
        }
        return rounds[r].perm[s];
    };

    int active_rounds = 0;
    const auto flip_bit = [&](uint32_t index) {
        work[index] ^= 1;
        diff[index] ^= 1;
        ++res.corrections;
        for (int r = 0; r < active_rounds; ++r) {
            const uint32_t b = rounds[r].block_of[index];
            rounds[r].odd[b] ^= 1;
            if (rounds[r].odd[b]) {
                auto [s, t] = block_range(rounds[r], b);
                pending.emplace(t - s, r, b);
            }
        }
    };

    for (int r = 0; r < cfg.rounds; ++r) {
        active_rounds = r + 1;
        RoundLayout& layout = rounds[r];
        for (uint32_t b = 0; b < layout.starts.size(); ++b) {
            auto [s, t] = block_range(layout, b);
            ++res.leakage_bits; // top-level parity of every block
            layout.odd[b] = range_diff_parity(layout, s, t);
            if (layout.odd[b]) {
                pending.emplace(t - s, r, b);
            }
        }
        while (!pending.empty()) {
            const auto [len, rr, bb] = pending.top();
            pending.pop();
            if (!rounds[rr].odd[bb]) {
                continue; // already fixed by a cascaded correction
            }
            const uint32_t index = binary_correct(rr, bb);
            flip_bit(index);
        }
    }

    res.success = true;
    for (size_t i = 0; i < n; ++i) {
        if (diff[i]) {
            res.success = false;
            break;
        }
    }
    res.f_efficiency = res.leakage_bits /
                       (static_cast<double>(n) * binary_entropy(e_est));
    return res;
}

} // namespace qkdfl
