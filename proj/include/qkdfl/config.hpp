// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace qkdfl {

/**
 * @brief Training-run configuration for the CLI.
 *
 * Loaded from flat key=value text (with '#' comments) or JSON with identical
 * field names. Zero values for tau/batch/rounds/lr mean "task default".
 */
struct RunConfig {
    std::string task; // ce | magic | mnist-qnn | mnist-classical | quadratic-bound
    size_t clients = 4;
    size_t k_sel = 0; // 0 -> all clients every round
    size_t rounds = 0;
    size_t tau = 0;
    size_t batch = 0;
    double lr = 0.0;
    int q = 16;
    double beta = 1.0;
    uint64_t seed = 1;
    std::string key_provider = "simulated";
    std::string key_dir;
    std::string mode = "masked"; // masked | plain | float
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    int digit_neg = 3;
    int digit_pos = 6;
    bool iid = true;

    void validate() const; // throws std::invalid_argument on bad fields
};

RunConfig load_run_config(const std::filesystem::path& path);

} // namespace qkdfl
