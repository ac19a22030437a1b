// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <map>

#include "qkdfl/key_provider.hpp"
#include "qkdfl/rng.hpp"
#include "qkdfl/secure_agg.hpp"

using namespace qkdfl;

namespace {

PairKeyLookup lookup_from(
    const std::map<std::pair<uint16_t, uint16_t>, PairKeyMaterial>& keys) {
    return [&keys](uint16_t lo, uint16_t hi) -> const PairKeyMaterial& {
        return keys.at({lo, hi});
    };
}

} // namespace

TEST_CASE("two-client toy instance follows the sign rule and cancels") {
    const int q = 3;
    std::map<std::pair<uint16_t, uint16_t>, PairKeyMaterial> keys;
    keys.emplace(std::make_pair(uint16_t{1}, uint16_t{2}),
                 PairKeyMaterial::from_residues(0, 1, 2, q,
                                                std::vector<uint64_t>{5}));
    const std::vector<uint16_t> selected{1, 2};

    const auto m1 = derive_mask_vector(1, selected, 1, q, lookup_from(keys));
    const auto m2 = derive_mask_vector(2, selected, 1, q, lookup_from(keys));
    CHECK(m1 == std::vector<int64_t>{5});
    CHECK(m2 == std::vector<int64_t>{-5});

    const MaskedUpdate u1 =
        mask_update(std::vector<int64_t>{2}, m1, q, 0, 1);
    const MaskedUpdate u2 =
        mask_update(std::vector<int64_t>{3}, m2, q, 0, 2);
    CHECK(u1.residues == std::vector<uint64_t>{7}); // (2+5) mod 8
    CHECK(u2.residues == std::vector<uint64_t>{6}); // (3-5) mod 8

    // At q = 3 the true sum 5 falls outside the signed window [-4, 3], so
    // the aggregate chain is checked at q = 4 where 5 is representable.
    std::map<std::pair<uint16_t, uint16_t>, PairKeyMaterial> keys4;
    keys4.emplace(std::make_pair(uint16_t{1}, uint16_t{2}),
                  PairKeyMaterial::from_residues(0, 1, 2, 4,
                                                 std::vector<uint64_t>{5}));
    const auto n1 = derive_mask_vector(1, selected, 1, 4, lookup_from(keys4));
    const auto n2 = derive_mask_vector(2, selected, 1, 4, lookup_from(keys4));
    const std::vector<MaskedUpdate> ups{
        mask_update(std::vector<int64_t>{2}, n1, 4, 0, 1),
        mask_update(std::vector<int64_t>{3}, n2, 4, 0, 2)};
    const auto agg = aggregate(ups, selected);
    CHECK(agg == std::vector<int64_t>{5}); // 2 + 3
}

TEST_CASE("singleton selection yields a zero mask") {
    std::map<std::pair<uint16_t, uint16_t>, PairKeyMaterial> keys;
    const std::vector<uint16_t> selected{3};
    const auto m = derive_mask_vector(3, selected, 4, 8, lookup_from(keys));
    CHECK(m == std::vector<int64_t>(4, 0));
}

TEST_CASE("masks cancel mod 2^q for random subsets and keys") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const int q = rng.bit() ? 8 : 16;
        const size_t m = 1 + rng.below(32);
        const size_t k = 2 + rng.below(6);
        std::vector<uint16_t> selected;
        for (size_t i = 0; i < k; ++i) {
            selected.push_back(static_cast<uint16_t>(2 * i + rng.below(2)));
        }
        std::map<std::pair<uint16_t, uint16_t>, PairKeyMaterial> keys;
        for (size_t a = 0; a < k; ++a) {
            for (size_t b = a + 1; b < k; ++b) {
                std::vector<uint64_t> res(m);
                for (auto& r : res) {
                    r = rng.below(uint64_t{1} << q);
                }
                keys.emplace(std::make_pair(selected[a], selected[b]),
                             PairKeyMaterial::from_residues(
                                 0, selected[a], selected[b], q, res));
            }
        }
        std::vector<int64_t> sum(m, 0);
        for (const uint16_t i : selected) {
            const auto mask =
                derive_mask_vector(i, selected, m, q, lookup_from(keys));
            for (size_t j = 0; j < m; ++j) {
                sum[j] += mask[j];
            }
        }
        const uint64_t wrap = uint64_t{1} << q;
        for (size_t j = 0; j < m; ++j) {
            CHECK((static_cast<uint64_t>(sum[j]) & (wrap - 1)) == 0);
        }
    }
}

TEST_CASE("aggregate rejects a submission set that mismatches the selection") {
    const std::vector<uint16_t> selected{0, 1, 2};
    std::vector<MaskedUpdate> ups(2);
    ups[0] = {0, 0, 8, {1}};
    ups[1] = {0, 1, 8, {2}};
    CHECK_THROWS_AS(aggregate(ups, selected), std::runtime_error);
}

TEST_CASE("masked residues are uniform when keys are uniform") {
    // chi-square goodness of fit, q = 8 (256 cells), alpha = 0.001
    Rng rng(99);
    const int q = 8;
    const uint64_t cells = 256;
    const int samples = 200000;
    std::vector<int> counts(cells, 0);
    const int64_t fixed_level = 57; // arbitrary plaintext level
    for (int i = 0; i < samples; ++i) {
        const int64_t key = decode_residue(rng.below(cells), q);
        const MaskedUpdate u = mask_update(std::vector<int64_t>{fixed_level},
                                           std::vector<int64_t>{key}, q, 0, 0);
        ++counts[u.residues[0]];
    }
    const double expected = static_cast<double>(samples) / cells;
    double chi2 = 0.0;
    for (const int c : counts) {
        const double d = c - expected;
        chi2 += d * d / expected;
    }
    CHECK(chi2 < 330.52); // chi2 quantile at 0.999, df = 255
}

TEST_CASE("ledger charge matches the published key-cost arithmetic") {
    CHECK(KeyLedger::bits_for(10, 61706, 32) == 88856640);
    CHECK(KeyLedger::mib_for(10, 61706, 32) ==
          doctest::Approx(10.593).epsilon(5e-5));
    CHECK(KeyLedger::mib_for(10, 61706, 16) ==
          doctest::Approx(5.296).epsilon(1e-4));
    CHECK(KeyLedger::mib_for(10, 61706, 8) ==
          doctest::Approx(2.648).epsilon(1e-4));
    CHECK(KeyLedger::bits_for(1, 61706, 32) == 0);
    // exact 4:2:1 ratio
    CHECK(KeyLedger::bits_for(10, 61706, 32) ==
          4 * KeyLedger::bits_for(10, 61706, 8));

    KeyLedger ledger;
    ledger.charge(0, 4, 100, 16);
    ledger.charge(1, 4, 100, 16);
    CHECK(ledger.total_bits() == 2 * 6 * 100 * 16);
    const auto entries = ledger.entries();
    REQUIRE(entries.size() == 2);
    CHECK(entries[1].cumulative_bits == ledger.total_bits());
    CHECK(ledger.to_json().find("\"cumulative_bits\"") != std::string::npos);
}

TEST_CASE("key material file round trip is byte exact") {
    Rng rng(5);
    std::vector<uint64_t> res(37);
    for (auto& r : res) {
        r = rng.below(uint64_t{1} << 12);
    }
    const auto mat = PairKeyMaterial::from_residues(9, 2, 7, 12, res);
    CHECK(mat.residues() == res);

    const auto path = std::filesystem::temp_directory_path() /
                      "qkdfl_test_key.qnqk";
    write_key_material(path, mat);
    const auto back = read_key_material(path);
    CHECK(back.round == mat.round);
    CHECK(back.lo == mat.lo);
    CHECK(back.hi == mat.hi);
    CHECK(back.q == mat.q);
    CHECK(back.m == mat.m);
    CHECK(back.bits == mat.bits);

    // truncated file is rejected
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 1);
    CHECK_THROWS(read_key_material(path));
    std::filesystem::remove(path);
}

TEST_CASE("providers enforce single use and symmetric material") {
    SimulatedKeyProvider provider(1234);
    const auto k1 = provider.take(3, 1, 0, 16, 8);
    CHECK(k1.lo == 0);
    CHECK(k1.hi == 1);
    CHECK_THROWS_AS(provider.take(3, 0, 1, 16, 8), SingleUseViolation);

    // same seed, opposite orientation: identical bits
    SimulatedKeyProvider provider2(1234);
    const auto k2 = provider2.take(3, 0, 1, 16, 8);
    CHECK(k1.bits == k2.bits);
}

TEST_CASE("file provider consumes pools and reports exhaustion") {
    const auto dir = std::filesystem::temp_directory_path() / "qkdfl_pool";
    std::filesystem::create_directories(dir);
    Rng rng(6);
    std::vector<uint64_t> res(8);
    for (auto& r : res) {
        r = rng.below(256);
    }
    write_key_material(dir / "r0.qnqk",
                       PairKeyMaterial::from_residues(0, 0, 1, 8, res));
    FileKeyProvider provider(dir);
    CHECK(provider.remaining_bits(0, 1) == 64);
    const auto got = provider.take(0, 0, 1, 4, 8);
    CHECK(got.residues() ==
          std::vector<uint64_t>(res.begin(), res.begin() + 4));
    CHECK(provider.remaining_bits(0, 1) == 32);
    CHECK_THROWS_AS(provider.take(1, 0, 1, 8, 8), KeyExhaustionError);
    std::filesystem::remove_all(dir);
}
