// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/mnist.hpp"

#include <fstream>
#include <stdexcept>

namespace qkdfl {

namespace {

constexpr uint32_t kImagesMagic = 0x00000803;
constexpr uint32_t kLabelsMagic = 0x00000801;

uint32_t get_u32_be(std::istream& is) {
    uint8_t b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) |
           (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

void put_u32_be(std::ostream& os, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v >> 24),
                          static_cast<uint8_t>(v >> 16),
                          static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

} // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open IDX images file: " +
                                 path.string());
    }
    if (get_u32_be(is) != kImagesMagic || !is) {
        throw std::runtime_error("bad IDX images magic in " + path.string());
    }
    IdxImages imgs;
    imgs.count = get_u32_be(is);
    imgs.rows = get_u32_be(is);
    imgs.cols = get_u32_be(is);
    const size_t total = static_cast<size_t>(imgs.count) * imgs.rows * imgs.cols;
    imgs.pixels.resize(total);
    is.read(reinterpret_cast<char*>(imgs.pixels.data()),
            static_cast<std::streamsize>(total));
    if (static_cast<size_t>(is.gcount()) != total) {
        throw std::runtime_error("truncated IDX images file: " + path.string());
    }
    return imgs;
}

std::vector<uint8_t> read_idx_labels(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot open IDX labels file: " +
                                 path.string());
    }
    if (get_u32_be(is) != kLabelsMagic || !is) {
        throw std::runtime_error("bad IDX labels magic in " + path.string());
    }
    const uint32_t count = get_u32_be(is);
    std::vector<uint8_t> labels(count);
    is.read(reinterpret_cast<char*>(labels.data()), count);
    if (static_cast<size_t>(is.gcount()) != count) {
        throw std::runtime_error("truncated IDX labels file: " + path.string());
    }
    return labels;
}

void write_idx_images(const std::filesystem::path& path,
                      const IdxImages& imgs) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write IDX images file: " +
                                 path.string());
    }
    put_u32_be(os, kImagesMagic);
    put_u32_be(os, imgs.count);
    put_u32_be(os, imgs.rows);
    put_u32_be(os, imgs.cols);
    os.write(reinterpret_cast<const char*>(imgs.pixels.data()),
             static_cast<std::streamsize>(imgs.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<uint8_t>& labels) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write IDX labels file: " +
                                 path.string());
    }
    put_u32_be(os, kLabelsMagic);
    put_u32_be(os, static_cast<uint32_t>(labels.size()));
    os.write(reinterpret_cast<const char*>(labels.data()),
             static_cast<std::streamsize>(labels.size()));
}

std::vector<double> block_mean_resize(const uint8_t* pixels, uint32_t rows,
                                      uint32_t cols, uint32_t side) {
    if (side == 0 || rows % side != 0 || cols % side != 0) {
        throw std::invalid_argument(
            "block_mean_resize: dimensions not divisible by target side");
    }
    const uint32_t br = rows / side;
    const uint32_t bc = cols / side;
    std::vector<double> out(static_cast<size_t>(side) * side, 0.0);
    for (uint32_t i = 0; i < side; ++i) {
        for (uint32_t j = 0; j < side; ++j) {
            double sum = 0.0;
            for (uint32_t di = 0; di < br; ++di) {
                for (uint32_t dj = 0; dj < bc; ++dj) {
                    sum += pixels[(i * br + di) * cols + (j * bc + dj)];
                }
            }
            out[i * side + j] = sum / (255.0 * br * bc);
        }
    }
    return out;
}

LabeledVectors mnist_two_class(const std::filesystem::path& images_path,
                               const std::filesystem::path& labels_path,
                               int neg_digit, int pos_digit, uint32_t side) {
    if (neg_digit == pos_digit || neg_digit < 0 || neg_digit > 9 ||
        pos_digit < 0 || pos_digit > 9) {
        throw std::invalid_argument("mnist_two_class: bad digit pair");
    }
    const IdxImages imgs = read_idx_images(images_path);
    const std::vector<uint8_t> labels = read_idx_labels(labels_path);
    if (labels.size() != imgs.count) {
        throw std::runtime_error("mnist_two_class: image/label count mismatch");
    }
    LabeledVectors out;
    const size_t stride = static_cast<size_t>(imgs.rows) * imgs.cols;
    for (uint32_t i = 0; i < imgs.count; ++i) {
        const int digit = labels[i];
        if (digit != neg_digit && digit != pos_digit) {
            continue;
        }
        out.x.push_back(block_mean_resize(imgs.pixels.data() + i * stride,
                                          imgs.rows, imgs.cols, side));
        out.labels.push_back(digit == neg_digit ? -1 : +1);
    }
    return out;
}

LabeledVectors mnist_full(const std::filesystem::path& images_path,
                          const std::filesystem::path& labels_path) {
    const IdxImages imgs = read_idx_images(images_path);
    const std::vector<uint8_t> labels = read_idx_labels(labels_path);
    if (labels.size() != imgs.count) {
        throw std::runtime_error("mnist_full: image/label count mismatch");
    }
    LabeledVectors out;
    const size_t stride = static_cast<size_t>(imgs.rows) * imgs.cols;
    out.x.reserve(imgs.count);
    out.labels.reserve(imgs.count);
    for (uint32_t i = 0; i < imgs.count; ++i) {
        std::vector<double> v(stride);
        const uint8_t* p = imgs.pixels.data() + i * stride;
        for (size_t k = 0; k < stride; ++k) {
            v[k] = p[k] / 255.0;
        }
        out.x.push_back(std::move(v));
        out.labels.push_back(labels[i]);
    }
    return out;
}

} // namespace qkdfl
