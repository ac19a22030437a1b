// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/statevector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace qkdfl {

namespace {

void check_qubit_count(int n) {
    if (n < 1 || n > kMaxQubits) {
        throw std::invalid_argument("qubit count must be in [1, " +
                                    std::to_string(kMaxQubits) + "]");
    }
}

// Bit position (from the LSB of the amplitude index) addressed by `qubit`.
inline int bit_of(int n, int qubit) { return n - 1 - qubit; }

} // namespace

double PureState::norm() const {
    double s = 0.0;
    for (const auto& a : amp) {
        s += std::norm(a);
    }
    return std::sqrt(s);
}

void PureState::check_valid() const {
    check_qubit_count(n);
    if (amp.size() != (size_t{1} << n)) {
        throw std::invalid_argument("PureState: dimension != 2^n");
    }
    if (std::abs(norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("PureState: not normalized");
    }
}

PureState zero_state(int n) {
    check_qubit_count(n);
    PureState s;
    s.n = n;
    s.amp.assign(size_t{1} << n, {0.0, 0.0});
    s.amp[0] = {1.0, 0.0};
    return s;
}

PureState amplitude_embed(std::span<const double> x, int n) {
    check_qubit_count(n);
    const size_t dim = size_t{1} << n;
    if (x.empty() || x.size() > dim) {
        throw std::invalid_argument("amplitude_embed: input length must be in "
                                    "[1, 2^n]");
    }
    double norm_sq = 0.0;
    for (const double v : x) {
        norm_sq += v * v;
    }
    if (!(norm_sq > 0.0)) {
        throw std::domain_error("amplitude_embed: zero vector");
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    PureState s;
    s.n = n;
    s.amp.assign(dim, {0.0, 0.0});
    for (size_t i = 0; i < x.size(); ++i) {
        s.amp[i] = {x[i] * inv, 0.0};
    }
    return s;
}

void apply_ry(PureState& state, int qubit, double theta) {
    const size_t stride = size_t{1} << bit_of(state.n, qubit);
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    auto& amp = state.amp;
    for (size_t base = 0; base < amp.size(); base += 2 * stride) {
        for (size_t i = base; i < base + stride; ++i) {
            const std::complex<double> a0 = amp[i];
            const std::complex<double> a1 = amp[i + stride];
            amp[i] = c * a0 - s * a1;
            amp[i + stride] = s * a0 + c * a1;
        }
    }
}

void apply_rz(PureState& state, int qubit, double phi) {
    const size_t stride = size_t{1} << bit_of(state.n, qubit);
    const std::complex<double> e0 = std::polar(1.0, -phi / 2.0);
    const std::complex<double> e1 = std::polar(1.0, phi / 2.0);
    auto& amp = state.amp;
    for (size_t base = 0; base < amp.size(); base += 2 * stride) {
        for (size_t i = base; i < base + stride; ++i) {
            amp[i] *= e0;
            amp[i + stride] *= e1;
        }
    }
}

void apply_cnot(PureState& state, int control, int target) {
    if (control == target) {
        throw std::invalid_argument("apply_cnot: control == target");
    }
    const size_t cbit = size_t{1} << bit_of(state.n, control);
    const size_t tbit = size_t{1} << bit_of(state.n, target);
    auto& amp = state.amp;
    for (size_t i = 0; i < amp.size(); ++i) {
        if ((i & cbit) != 0 && (i & tbit) == 0) {
            std::swap(amp[i], amp[i | tbit]);
        }
    }
}

PureState apply_hea(const PureState& input, const HeaCircuit& circuit,
                    std::span<const double> params) {
    if (circuit.n != input.n) {
        throw std::invalid_argument("apply_hea: qubit count mismatch");
    }
    if (params.size() != circuit.param_count()) {
        throw std::invalid_argument("apply_hea: parameter count mismatch");
    }
    PureState state = input;
    const int n = circuit.n;
    for (int layer = 0; layer < circuit.layers; ++layer) {
        const size_t off = static_cast<size_t>(layer) * 2 * n;
        for (int k = 0; k < n; ++k) {
            apply_ry(state, k, params[off + k]);
        }
        for (int k = 0; k < n; ++k) {
            apply_rz(state, k, params[off + n + k]);
        }
        if (n > 1) {
            for (int k = 0; k < n; ++k) {
                apply_cnot(state, k, (k + 1) % n);
            }
        }
    }
    return state;
}

double expect_z_last(const PureState& state) {
    double e = 0.0;
    for (size_t i = 0; i < state.amp.size(); ++i) {
        const double p = std::norm(state.amp[i]);
        e += (i & 1U) ? -p : p; // last qubit = least significant bit
    }
    return e;
}

PureState parallel_double(const PureState& state) {
    if (2 * state.n > kMaxQubits) {
        throw std::invalid_argument("parallel_double: 2n exceeds qubit limit");
    }
    PureState out;
    out.n = 2 * state.n;
    const size_t dim = state.amp.size();
    out.amp.resize(dim * dim);
    for (size_t i = 0; i < dim; ++i) {
        for (size_t j = 0; j < dim; ++j) {
            out.amp[i * dim + j] = state.amp[i] * state.amp[j];
        }
    }
    return out;
}

double partial_trace_purity(const PureState& state,
                            std::span<const int> subset) {
    if (subset.empty()) {
        return 1.0;
    }
    std::vector<int> qs(subset.begin(), subset.end());
    std::sort(qs.begin(), qs.end());
    if (qs.front() < 0 || qs.back() >= state.n ||
        std::adjacent_find(qs.begin(), qs.end()) != qs.end()) {
        throw std::invalid_argument("partial_trace_purity: bad subset");
    }
    const size_t sub_dim = size_t{1} << qs.size();
    const size_t env_dim = state.amp.size() >> qs.size();

    // Masks to split an amplitude index into (subset bits, environment bits).
    std::vector<size_t> sub_bits(qs.size());
    for (size_t k = 0; k < qs.size(); ++k) {
        sub_bits[k] = size_t{1} << bit_of(state.n, qs[k]);
    }
    std::vector<size_t> env_bits;
    for (int q = 0; q < state.n; ++q) {
        if (!std::binary_search(qs.begin(), qs.end(), q)) {
            env_bits.push_back(size_t{1} << bit_of(state.n, q));
        }
    }

    const auto compose = [](const std::vector<size_t>& bits, size_t code) {
        size_t idx = 0;
        for (size_t k = 0; k < bits.size(); ++k) {
            if ((code >> (bits.size() - 1 - k)) & 1U) {
                idx |= bits[k];
            }
        }
        return idx;
    };

    std::vector<std::complex<double>> rho(sub_dim * sub_dim, {0.0, 0.0});
    for (size_t env = 0; env < env_dim; ++env) {
        const size_t env_idx = compose(env_bits, env);
        for (size_t a = 0; a < sub_dim; ++a) {
            const std::complex<double> va =
                state.amp[compose(sub_bits, a) | env_idx];
            if (va == std::complex<double>{0.0, 0.0}) {
                continue;
            }
            for (size_t b = 0; b < sub_dim; ++b) {
                const std::complex<double> vb =
                    state.amp[compose(sub_bits, b) | env_idx];
                rho[a * sub_dim + b] += va * std::conj(vb);
            }
        }
    }
    double purity = 0.0;
    for (const auto& x : rho) {
        purity += std::norm(x);
    }
    return purity;
}

double pauli_expectation(const PureState& state, std::string_view pauli) {
    if (pauli.size() != static_cast<size_t>(state.n)) {
        throw std::invalid_argument("pauli_expectation: string length != n");
    }
    size_t flip_mask = 0;  // X and Y factors flip the bit
    size_t z_mask = 0;     // Z and Y factors contribute (-1)^bit
    size_t y_mask = 0;     // Y factors contribute an extra phase
    for (int q = 0; q < state.n; ++q) {
        const size_t bit = size_t{1} << bit_of(state.n, q);
        switch (pauli[static_cast<size_t>(q)]) {
        case 'I':
            break;
        case 'X':
            flip_mask |= bit;
            break;
        case 'Y':
            flip_mask |= bit;
            z_mask |= bit;
            y_mask |= bit;
            break;
        case 'Z':
            z_mask |= bit;
            break;
        default:
            throw std::invalid_argument(
                "pauli_expectation: characters must be I, X, Y or Z");
        }
    }
    const int y_count = std::popcount(y_mask);
    // P|i> = phase * |i ^ flip_mask>;   for each Y: X Z up to the factor i,
    // i.e. P = i^{#Y} * prod X^x Z^z with Z acting first.
    std::complex<double> e{0.0, 0.0};
    static const std::complex<double> i_pow[4] = {
        {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    const std::complex<double> global = i_pow[y_count % 4];
    for (size_t i = 0; i < state.amp.size(); ++i) {
        const std::complex<double> a = state.amp[i];
        if (a == std::complex<double>{0.0, 0.0}) {
            continue;
        }
        const int sign = std::popcount(i & z_mask) % 2 == 0 ? 1 : -1;
        e += std::conj(state.amp[i ^ flip_mask]) * global *
             (sign > 0 ? a : -a);
    }
    if (std::abs(e.imag()) > 1e-9) {
        throw std::logic_error("pauli_expectation: non-real expectation");
    }
    return e.real();
}

std::vector<double> parameter_shift_grad(const HeaCircuit& circuit,
                                         const PureState& input, double label,
                                         std::span<const double> params) {
    if (params.size() != circuit.param_count()) {
        throw std::invalid_argument(
            "parameter_shift_grad: parameter count mismatch");
    }
    const double pred = expect_z_last(apply_hea(input, circuit, params));
    const double dloss = 2.0 * (pred - label);
    std::vector<double> shifted(params.begin(), params.end());
    std::vector<double> grad(params.size());
    const double half_pi = 1.5707963267948966;
    for (size_t k = 0; k < params.size(); ++k) {
        const double original = shifted[k];
        shifted[k] = original + half_pi;
        const double up = expect_z_last(apply_hea(input, circuit, shifted));
        shifted[k] = original - half_pi;
        const double down = expect_z_last(apply_hea(input, circuit, shifted));
        shifted[k] = original;
        grad[k] = dloss * 0.5 * (up - down);
    }
    return grad;
}

namespace {

constexpr char kStateMagic[4] = {'Q', 'S', 'T', 'V'};
constexpr uint8_t kStateVersion = 1;

void put_f64_le(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    uint8_t b[8];
    for (int i = 0; i < 8; ++i) {
        b[i] = static_cast<uint8_t>(bits >> (8 * i));
    }
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64_le(std::istream& is) {
    uint8_t b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | b[i];
    }
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void save_states(const std::filesystem::path& path,
                 std::span<const PureState> states) {
    if (states.empty()) {
        throw std::invalid_argument("save_states: nothing to save");
    }
    const int n = states[0].n;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("save_states: cannot open " + path.string());
    }
    os.write(kStateMagic, 4);
    os.put(static_cast<char>(kStateVersion));
    const auto count = static_cast<uint32_t>(states.size());
    const uint8_t cb[4] = {
        static_cast<uint8_t>(count), static_cast<uint8_t>(count >> 8),
        static_cast<uint8_t>(count >> 16), static_cast<uint8_t>(count >> 24)};
    os.write(reinterpret_cast<const char*>(cb), 4);
    os.put(static_cast<char>(n));
    for (const PureState& s : states) {
        if (s.n != n) {
            throw std::invalid_argument("save_states: mixed qubit counts");
        }
        for (const auto& a : s.amp) {
            put_f64_le(os, a.real());
            put_f64_le(os, a.imag());
        }
    }
}

std::vector<PureState> load_states(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("load_states: cannot open " + path.string());
    }
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kStateMagic, 4) != 0) {
        throw std::runtime_error("load_states: bad magic");
    }
    if (is.get() != kStateVersion) {
        throw std::runtime_error("load_states: unsupported version");
    }
    uint8_t cb[4];
    is.read(reinterpret_cast<char*>(cb), 4);
    const uint32_t count = uint32_t{cb[0]} | (uint32_t{cb[1]} << 8) |
                           (uint32_t{cb[2]} << 16) | (uint32_t{cb[3]} << 24);
    const int n = is.get();
    check_qubit_count(n);
    std::vector<PureState> out(count);
    const size_t dim = size_t{1} << n;
    for (PureState& s : out) {
        s.n = n;
        s.amp.resize(dim);
        for (auto& a : s.amp) {
            const double re = get_f64_le(is);
            const double im = get_f64_le(is);
            a = {re, im};
        }
    }
    if (!is) {
        throw std::runtime_error("load_states: truncated file");
    }
    return out;
}

} // namespace qkdfl
