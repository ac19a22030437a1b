// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/digits_fixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "qkdfl/mnist.hpp"
#include "qkdfl/rng.hpp"

namespace qkdfl {

namespace {

struct BaseDigits {
    std::vector<std::array<uint8_t, 64>> images; // values 0..16
    std::vector<uint8_t> labels;
};

BaseDigits load_base(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("digits fixture: cannot open " +
                                 path.string());
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "UCID", 4) != 0) {
        throw std::runtime_error("digits fixture: bad magic");
    }
    uint8_t cb[4];
    is.read(reinterpret_cast<char*>(cb), 4);
    const uint32_t count = (uint32_t{cb[0]} << 24) | (uint32_t{cb[1]} << 16) |
                           (uint32_t{cb[2]} << 8) | uint32_t{cb[3]};
    BaseDigits base;
    base.images.resize(count);
    base.labels.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        base.labels[i] = static_cast<uint8_t>(is.get());
        is.read(reinterpret_cast<char*>(base.images[i].data()), 64);
    }
    if (!is) {
        throw std::runtime_error("digits fixture: truncated source");
    }
    return base;
}

// Bilinear sample of the 8x8 grid at fractional coordinates.
double sample_bilinear(const std::array<uint8_t, 64>& img, double r, double c) {
    const double rc = std::clamp(r, 0.0, 7.0);
    const double cc = std::clamp(c, 0.0, 7.0);
    const int r0 = static_cast<int>(std::floor(rc));
    const int c0 = static_cast<int>(std::floor(cc));
    const int r1 = std::min(r0 + 1, 7);
    const int c1 = std::min(c0 + 1, 7);
    const double fr = rc - r0;
    const double fc = cc - c0;
    const double top = (1.0 - fc) * img[r0 * 8 + c0] + fc * img[r0 * 8 + c1];
    const double bot = (1.0 - fc) * img[r1 * 8 + c0] + fc * img[r1 * 8 + c1];
    return (1.0 - fr) * top + fr * bot;
}

void render(const std::array<uint8_t, 64>& base, uint8_t* out, Rng& rng) {
    const double shift_r = rng.uniform(-1.5, 1.5);
    const double shift_c = rng.uniform(-1.5, 1.5);
    const double gain = rng.uniform(0.78, 1.0);
    for (int r = 0; r < 28; ++r) {
        for (int c = 0; c < 28; ++c) {
            const double src_r = (r + 0.5) * 8.0 / 28.0 - 0.5 + shift_r * 8.0 / 28.0;
            const double src_c = (c + 0.5) * 8.0 / 28.0 - 0.5 + shift_c * 8.0 / 28.0;
            double v = sample_bilinear(base, src_r, src_c) / 16.0;
            v = gain * v * 255.0 + 6.0 * rng.normal();
            out[r * 28 + c] =
                static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
}

void synthesize(const BaseDigits& base, const std::vector<size_t>& pool,
                size_t count, Rng& rng, IdxImages& imgs,
                std::vector<uint8_t>& labels) {
    imgs.count = static_cast<uint32_t>(count);
    imgs.rows = 28;
    imgs.cols = 28;
    imgs.pixels.resize(count * 784);
    labels.resize(count);
    for (size_t i = 0; i < count; ++i) {
        const size_t pick = pool[rng.below(pool.size())];
        labels[i] = base.labels[pick];
        render(base.images[pick], imgs.pixels.data() + i * 784, rng);
    }
}

} // namespace

void generate_digits_idx(const DigitsFixtureOptions& opt) {
    const BaseDigits base = load_base(opt.source_bin);
    std::filesystem::create_directories(opt.out_dir);

    // Disjoint per-class 80/20 split of the base images.
    std::vector<size_t> train_pool;
    std::vector<size_t> test_pool;
    Rng split_rng = Rng(opt.seed).stream("base-split");
    for (int digit = 0; digit < 10; ++digit) {
        std::vector<size_t> members;
        for (size_t i = 0; i < base.labels.size(); ++i) {
            if (base.labels[i] == digit) {
                members.push_back(i);
            }
        }
        split_rng.shuffle(members);
        const size_t cut = members.size() * 4 / 5;
        train_pool.insert(train_pool.end(), members.begin(),
                          members.begin() + static_cast<ptrdiff_t>(cut));
        test_pool.insert(test_pool.end(),
                         members.begin() + static_cast<ptrdiff_t>(cut),
                         members.end());
    }

    IdxImages train_imgs;
    std::vector<uint8_t> train_labels;
    Rng train_rng = Rng(opt.seed).stream("train-synth");
    synthesize(base, train_pool, opt.train_count, train_rng, train_imgs,
               train_labels);
    write_idx_images(opt.out_dir / "train-images.idx3", train_imgs);
    write_idx_labels(opt.out_dir / "train-labels.idx1", train_labels);

    IdxImages test_imgs;
    std::vector<uint8_t> test_labels;
    Rng test_rng = Rng(opt.seed).stream("test-synth");
    synthesize(base, test_pool, opt.test_count, test_rng, test_imgs,
               test_labels);
    write_idx_images(opt.out_dir / "test-images.idx3", test_imgs);
    write_idx_labels(opt.out_dir / "test-labels.idx1", test_labels);
}

} // namespace qkdfl
