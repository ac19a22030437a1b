// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace qkdfl {

/// Raw images from an IDX (big-endian) file: magic 0x00000803, then count,
/// rows, cols, then count*rows*cols unsigned bytes.
struct IdxImages {
    uint32_t count = 0;
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<uint8_t> pixels; // row-major, image-major
};

IdxImages read_idx_images(const std::filesystem::path& path);

/// Labels from an IDX file with magic 0x00000801.
std::vector<uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, const IdxImages& imgs);
void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<uint8_t>& labels);

/// Downsample one rows x cols image to `side` x `side` by non-overlapping
/// block averaging (rows and cols must be divisible by side), scaled to
/// [0, 1].
std::vector<double> block_mean_resize(const uint8_t* pixels, uint32_t rows,
                                      uint32_t cols, uint32_t side);

struct LabeledVectors {
    std::vector<std::vector<double>> x;
    std::vector<int> labels; // -1/+1 for two-class, or raw digit for multi
};

/// Two-class subset: keep digits {neg, pos}, resize to side x side, flatten,
/// label -1 (neg digit) / +1 (pos digit).
LabeledVectors mnist_two_class(const std::filesystem::path& images_path,
                               const std::filesystem::path& labels_path,
                               int neg_digit, int pos_digit,
                               uint32_t side = 4);

/// All ten classes at full resolution, pixels scaled to [0, 1]; labels are
/// the digit values. Used by the classical-model experiments.
LabeledVectors mnist_full(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path);

} // namespace qkdfl
