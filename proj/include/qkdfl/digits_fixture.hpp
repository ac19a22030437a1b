// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

namespace qkdfl {

/**
 * @brief Deterministic IDX fixture built from the bundled UCI 8x8 digits.
 *
 * Expands the 1797 base images into 28x28 IDX train/test files via bilinear
 * upscaling plus seeded shift, intensity and noise augmentation. Train and
 * test draw from disjoint base-image pools (80/20 per class), so test
 * accuracy measures generalization across writers' samples rather than
 * recognition of augmented copies.
 */
struct DigitsFixtureOptions {
    std::filesystem::path source_bin; // data/uci_digits_8x8.bin
    std::filesystem::path out_dir;
    size_t train_count = 60000;
    size_t test_count = 10000;
    uint64_t seed = 1;
};

/// Writes train-images.idx3 / train-labels.idx1 / test-images.idx3 /
/// test-labels.idx1 under out_dir.
void generate_digits_idx(const DigitsFixtureOptions& opt);

} // namespace qkdfl
