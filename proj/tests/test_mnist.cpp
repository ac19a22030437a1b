// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "qkdfl/mnist.hpp"

using namespace qkdfl;

namespace {

struct Fixture {
    std::filesystem::path dir;
    std::filesystem::path images;
    std::filesystem::path labels;

    Fixture() {
        dir = std::filesystem::temp_directory_path() / "qkdfl_idx";
        std::filesystem::create_directories(dir);
        images = dir / "imgs.idx3";
        labels = dir / "labels.idx1";
        IdxImages imgs;
        imgs.count = 6;
        imgs.rows = 28;
        imgs.cols = 28;
        imgs.pixels.resize(6 * 28 * 28);
        // image i has constant value 40 * i
        for (uint32_t i = 0; i < 6; ++i) {
            std::fill_n(imgs.pixels.begin() + i * 784, 784,
                        static_cast<uint8_t>(40 * i));
        }
        write_idx_images(images, imgs);
        write_idx_labels(labels, {3, 6, 3, 9, 6, 3});
    }
    ~Fixture() { std::filesystem::remove_all(dir); }
};

} // namespace

TEST_CASE("IDX round trip and header validation") {
    Fixture f;
    const IdxImages imgs = read_idx_images(f.images);
    CHECK(imgs.count == 6);
    CHECK(imgs.rows == 28);
    CHECK(imgs.cols == 28);
    const auto labels = read_idx_labels(f.labels);
    CHECK(labels == std::vector<uint8_t>{3, 6, 3, 9, 6, 3});

    // wrong magic
    const auto bogus = f.dir / "bogus.idx3";
    {
        std::ofstream os(bogus, std::ios::binary);
        os.write("\x00\x00\x08\x05", 4);
    }
    CHECK_THROWS(read_idx_images(bogus));

    // truncated pixel payload
    const auto trunc = f.dir / "trunc.idx3";
    std::filesystem::copy_file(f.images, trunc);
    std::filesystem::resize_file(trunc, 100);
    CHECK_THROWS(read_idx_images(trunc));
}

TEST_CASE("block mean resize: constants map to constants") {
    std::vector<uint8_t> img(784, 130);
    const auto v = block_mean_resize(img.data(), 28, 28, 4);
    REQUIRE(v.size() == 16);
    for (const double p : v) {
        CHECK(p == doctest::Approx(130.0 / 255.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(block_mean_resize(img.data(), 28, 28, 5),
                    std::invalid_argument);
}

TEST_CASE("block mean averages distinct blocks independently") {
    std::vector<uint8_t> img(784, 0);
    // top-left 7x7 block set to 255
    for (int r = 0; r < 7; ++r) {
        for (int c = 0; c < 7; ++c) {
            img[r * 28 + c] = 255;
        }
    }
    const auto v = block_mean_resize(img.data(), 28, 28, 4);
    CHECK(v[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (size_t i = 1; i < 16; ++i) {
        CHECK(v[i] == 0.0);
    }
}

TEST_CASE("two-class filter keeps only the requested digits") {
    Fixture f;
    const LabeledVectors data = mnist_two_class(f.images, f.labels, 3, 6);
    REQUIRE(data.x.size() == 5); // three 3s and two 6s
    int neg = 0;
    int pos = 0;
    for (size_t i = 0; i < data.labels.size(); ++i) {
        CHECK(data.x[i].size() == 16);
        (data.labels[i] == -1 ? neg : pos)++;
    }
    CHECK(neg == 3);
    CHECK(pos == 2);
    CHECK_THROWS_AS(mnist_two_class(f.images, f.labels, 3, 3),
                    std::invalid_argument);
}

TEST_CASE("full ingestion scales pixels into [0,1]") {
    Fixture f;
    const LabeledVectors data = mnist_full(f.images, f.labels);
    REQUIRE(data.x.size() == 6);
    CHECK(data.x[0][0] == 0.0);
    CHECK(data.x[5][100] == doctest::Approx(200.0 / 255.0));
    CHECK(data.labels[3] == 9);
}
