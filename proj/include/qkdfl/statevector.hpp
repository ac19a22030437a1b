// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file
 * Dense statevector simulation for small qubit counts: amplitude embedding,
 * the hardware-efficient ansatz used by the QNN classifiers, expectation
 * values, partial-trace purities and parameter-shift gradients.
 */

#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace qkdfl {

inline constexpr int kMaxQubits = 12;

/**
 * @brief Normalized pure state on n qubits.
 *
 * Qubit 0 is the most significant bit of the amplitude index: for n = 2 the
 * basis order is |00>, |01>, |10>, |11> with qubit 0 the left bit.
 */
struct PureState {
    int n = 0;
    std::vector<std::complex<double>> amp;

    [[nodiscard]] size_t dim() const { return amp.size(); }
    [[nodiscard]] double norm() const;
    void check_valid() const; // throws if dim != 2^n or norm off by > 1e-10
};

/// |0...0> on n qubits.
PureState zero_state(int n);

/// Zero-pad x to dimension 2^n and normalize. Throws on a zero vector.
PureState amplitude_embed(std::span<const double> x, int n);

/// In-place single-qubit rotations and the two-qubit CNOT.
void apply_ry(PureState& state, int qubit, double theta);
void apply_rz(PureState& state, int qubit, double phi);
void apply_cnot(PureState& state, int control, int target);

/**
 * @brief Layered hardware-efficient ansatz.
 *
 * Each layer applies RY(theta_k) then RZ(phi_k) on every qubit followed by a
 * CNOT ring (qubit k controls k+1 mod n). Parameters are laid out layer by
 * layer: [theta_0..theta_{n-1}, phi_0..phi_{n-1}] per layer, 2*n*layers in
 * total.
 */
struct HeaCircuit {
    int n = 0;
    int layers = 0;

    [[nodiscard]] size_t param_count() const {
        return static_cast<size_t>(2) * n * layers;
    }
};

PureState apply_hea(const PureState& input, const HeaCircuit& circuit,
                    std::span<const double> params);

/// <Z> on the last qubit (qubit n-1, least significant index bit).
double expect_z_last(const PureState& state);

/// Tensor square: the same state fed in twice in parallel, on 2n qubits.
PureState parallel_double(const PureState& state);

/// Tr[rho_subset^2] for the reduced state on the given qubit subset.
/// The empty subset returns 1 (scalar trace convention).
double partial_trace_purity(const PureState& state,
                            std::span<const int> subset);

/// <psi| P |psi> for a Pauli string over {I, X, Y, Z}, one character per
/// qubit, index 0 = qubit 0.
double pauli_expectation(const PureState& state, std::string_view pauli);

/**
 * Gradient of the squared error (<Z_last> - label)^2 with respect to every
 * circuit parameter, via the parameter-shift rule
 *   d<Z>/d theta_k = [f(theta_k + pi/2) - f(theta_k - pi/2)] / 2.
 */
std::vector<double> parameter_shift_grad(const HeaCircuit& circuit,
                                         const PureState& input, double label,
                                         std::span<const double> params);

/// Serialization: header (magic "QSTV", version u8, count u32, n u8) then
/// per state 2^n little-endian (re, im) f64 pairs.
void save_states(const std::filesystem::path& path,
                 std::span<const PureState> states);
std::vector<PureState> load_states(const std::filesystem::path& path);

} // namespace qkdfl
