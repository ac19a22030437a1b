// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "qkdfl/rng.hpp"
#include "qkdfl/statevector.hpp"

namespace qkdfl {

/// Concentratable entanglement: 1 - 2^{-n} * sum over the full power set of
/// qubit subsets of the reduced-state purities. Zero exactly on product
/// states. Enumerates 2^n subsets; n <= 6.
double concentratable_entanglement(const PureState& state);

/// Stabilizer Renyi entropy M2 = -log2( sum_P <P>^4 / 2^n ) over all 4^n
/// Pauli strings. Zero exactly on stabilizer states. n <= 6.
double stabilizer_renyi_entropy(const PureState& state);

/// All pure stabilizer states on n qubits (n <= 3), canonical global phase,
/// pairwise distinct. Sizes 6 / 60 / 1080 for n = 1 / 2 / 3.
std::vector<PureState> enumerate_stabilizer_states(int n);

/// Haar-random pure states accepted when their stabilizer Renyi entropy
/// exceeds `threshold`. Throws after `max_attempts_per_state` rejections.
std::vector<PureState> sample_magic_states(int n, double threshold,
                                           size_t count, Rng& rng,
                                           size_t max_attempts_per_state = 10000);

struct LabeledQuantumSet {
    std::vector<PureState> states;
    std::vector<int> labels; // -1 / +1
    std::string meta_json;   // generation parameters and class statistics
};

/**
 * Balanced entanglement dataset: states prepared by a 6-layer hardware-
 * efficient ansatz with angles scaled until the concentratable entanglement
 * lands inside [target - band, target + band]. Low-CE states are labeled -1,
 * high-CE states +1.
 */
LabeledQuantumSet generate_ce_dataset(size_t count, Rng& rng, int n = 3,
                                      double low_target = 0.05,
                                      double high_target = 0.35,
                                      double band = 0.01);

/// Balanced nonstabilizerness dataset: stabilizer states (label -1) sampled
/// without replacement from the full enumeration vs Haar-random states with
/// stabilizer Renyi entropy > threshold (label +1).
LabeledQuantumSet generate_magic_dataset(size_t count, Rng& rng, int n = 3,
                                         double threshold = 1.5);

struct ClientPartition {
    std::vector<std::vector<size_t>> assignments; // client -> sample indices
};

/// Equal per-client splits with balanced classes (labels must be -1/+1).
ClientPartition partition_iid(const std::vector<int>& labels, size_t clients,
                              size_t per_client, Rng& rng);

/// Per-client (count of -1 class, count of +1 class) splits.
ClientPartition partition_counts(
    const std::vector<int>& labels,
    const std::vector<std::pair<size_t, size_t>>& counts, Rng& rng);

/// Write states + JSON manifest (labels, metadata); load them back.
void save_labeled_set(const std::filesystem::path& dir,
                      const std::string& name, const LabeledQuantumSet& set);
LabeledQuantumSet load_labeled_set(const std::filesystem::path& dir,
                                   const std::string& name);

} // namespace qkdfl
