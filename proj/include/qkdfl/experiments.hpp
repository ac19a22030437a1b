// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "qkdfl/datasets.hpp"
#include "qkdfl/federated.hpp"
#include "qkdfl/mnist.hpp"

namespace qkdfl::experiments {

struct TaskResult {
    RunResult run;
    FedConfig cfg;
    std::string data_meta_json;
    uint64_t dataset_hash = 0;
};

using ProgressFn = std::function<void(const RoundMetrics&)>;

/**
 * Quantum-state classification ("ce" or "magic"): balanced per-client
 * datasets generated on the fly, states fed in twice in parallel into a
 * 6-qubit 4-layer ansatz, Adam at 0.01 with batch 32 and one local epoch,
 * 16-bit quantization by default. Client data is identical across runs with
 * the same seed regardless of the client count, so adding a client only adds
 * its data.
 */
TaskResult run_quantum_task(const std::string& task, size_t clients, int q,
                            size_t rounds, uint64_t seed,
                            AggregationMode mode = AggregationMode::Masked,
                            const ProgressFn& progress = {});

struct MnistQnnOptions {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    int neg_digit = 3;
    int pos_digit = 6;
    bool iid = true;
    size_t clients = 4;
    size_t rounds = 200;
    int q = 16;
    uint64_t seed = 1;
    AggregationMode mode = AggregationMode::Masked;
    size_t per_client = 500;
    size_t test_count = 500;
};

/// Two-class image classification with a 4-qubit 3-layer QNN on 4x4
/// downsampled images; IID splits 250/250, non-IID splits (200,300),
/// (300,200), (167,333), (333,167).
TaskResult run_mnist_qnn(const MnistQnnOptions& opt,
                         const ProgressFn& progress = {});

struct MnistClassicalOptions {
    std::filesystem::path train_images;
    std::filesystem::path train_labels;
    std::filesystem::path test_images;
    std::filesystem::path test_labels;
    size_t clients = 200;
    size_t k_sel = 10;
    size_t rounds = 200;
    size_t tau = 5;
    size_t batch = 32;
    double lr = 0.01;
    int q = 8;
    double beta = 0.25;
    uint64_t seed = 1;
    AggregationMode mode = AggregationMode::Masked;
    size_t hidden = 32;
    size_t per_client = 300;
};

/// Scalability run: the training set is split uniformly at random across the
/// clients (per_client each), 5% of clients participate per round.
TaskResult run_mnist_classical(const MnistClassicalOptions& opt,
                               const ProgressFn& progress = {});

struct QuadraticBoundOptions {
    int q = 8;
    size_t tau = 1;
    size_t seeds = 20;
    uint64_t seed0 = 1;
    size_t rounds = 200;
    size_t dim = 16;
    size_t clients = 4;
    double mu = 0.5;
    double smoothness = 2.0;
    double eta = 0.4;
    double sigma_sq = 0.25;
    size_t batch = 8;
    double beta = 1.0;
};

struct QuadraticBoundResult {
    std::vector<double> bound;          // bound(t), t = 0..rounds
    std::vector<double> empirical_mean; // E[f(theta^t)] - f*, seed average
    bool empirical_within_bound = true;
};

/// Theorem-style check on the synthetic quadratic with analytically known
/// mu, L and sigma^2: runs the full masked pipeline and compares the
/// seed-averaged optimality gap against the closed-form bound at every round.
QuadraticBoundResult run_quadratic_bound(const QuadraticBoundOptions& opt);

/// Deterministic hash used in run manifests.
uint64_t fnv1a_hash(const void* data, size_t bytes, uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(uint64_t value);

} // namespace qkdfl::experiments
