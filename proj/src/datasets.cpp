// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/datasets.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace qkdfl {

namespace {

void check_small(int n, int limit, const char* what) {
    if (n < 1 || n > limit) {
        throw std::invalid_argument(std::string(what) + ": n must be in [1, " +
                                    std::to_string(limit) + "]");
    }
}

} // namespace

double concentratable_entanglement(const PureState& state) {
    check_small(state.n, 6, "concentratable_entanglement");
    const size_t subsets = size_t{1} << state.n;
    double purity_sum = 0.0;
    std::vector<int> qubits;
    for (size_t mask = 0; mask < subsets; ++mask) {
        qubits.clear();
        for (int q = 0; q < state.n; ++q) {
            if ((mask >> q) & 1U) {
                qubits.push_back(q);
            }
        }
        purity_sum += partial_trace_purity(state, qubits);
    }
    return 1.0 - purity_sum / static_cast<double>(subsets);
}

double stabilizer_renyi_entropy(const PureState& state) {
    check_small(state.n, 6, "stabilizer_renyi_entropy");
    const size_t strings = size_t{1} << (2 * state.n);
    std::string pauli(static_cast<size_t>(state.n), 'I');
    double fourth_moment = 0.0;
    static const char kLetters[4] = {'I', 'X', 'Y', 'Z'};
    for (size_t code = 0; code < strings; ++code) {
        size_t c = code;
        for (int q = 0; q < state.n; ++q) {
            pauli[static_cast<size_t>(q)] = kLetters[c & 3U];
            c >>= 2;
        }
        const double e = pauli_expectation(state, pauli);
        fourth_moment += e * e * e * e;
    }
    const double arg = fourth_moment / static_cast<double>(size_t{1} << state.n);
    return -std::log2(arg);
}

namespace {

// Pauli group element mod phase, encoded as (x bits << n) | z bits.
struct SymplecticSpace {
    int n;
    [[nodiscard]] bool commute(uint32_t a, uint32_t b) const {
        const uint32_t xa = a >> n, za = a & ((1U << n) - 1);
        const uint32_t xb = b >> n, zb = b & ((1U << n) - 1);
        return (std::popcount(xa & zb) + std::popcount(xb & za)) % 2 == 0;
    }
};

using Matrix = std::vector<std::complex<double>>; // row-major dim x dim

// Hermitian Pauli matrix for code (x|z): i^{|x&z|} X^x Z^z.
Matrix pauli_matrix(int n, uint32_t code) {
    const uint32_t x = code >> n;
    const uint32_t z = code & ((1U << n) - 1);
    const size_t dim = size_t{1} << n;
    static const std::complex<double> i_pow[4] = {
        {1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    const std::complex<double> phase = i_pow[std::popcount(x & z) % 4];
    Matrix m(dim * dim, {0.0, 0.0});
    for (size_t b = 0; b < dim; ++b) {
        const int sign = std::popcount(b & z) % 2 == 0 ? 1 : -1;
        m[(b ^ x) * dim + b] = phase * static_cast<double>(sign);
    }
    return m;
}

Matrix identity(size_t dim) {
    Matrix m(dim * dim, {0.0, 0.0});
    for (size_t i = 0; i < dim; ++i) {
        m[i * dim + i] = {1.0, 0.0};
    }
    return m;
}

Matrix multiply(const Matrix& a, const Matrix& b, size_t dim) {
    Matrix c(dim * dim, {0.0, 0.0});
    for (size_t i = 0; i < dim; ++i) {
        for (size_t k = 0; k < dim; ++k) {
            const std::complex<double> aik = a[i * dim + k];
            if (aik == std::complex<double>{0.0, 0.0}) {
                continue;
            }
            for (size_t j = 0; j < dim; ++j) {
                c[i * dim + j] += aik * b[k * dim + j];
            }
        }
    }
    return c;
}

// All dim-n isotropic subspaces, each given by its sorted nonzero elements.
std::vector<std::vector<uint32_t>> isotropic_subspaces(int n) {
    const SymplecticSpace sp{n};
    const uint32_t count = 1U << (2 * n);
    std::vector<std::vector<uint32_t>> out;
    std::map<std::vector<uint32_t>, bool> seen;

    const auto span_of = [&](std::vector<uint32_t> gens) {
        std::vector<uint32_t> elems{0};
        for (const uint32_t g : gens) {
            const size_t sz = elems.size();
            for (size_t i = 0; i < sz; ++i) {
                elems.push_back(elems[i] ^ g);
            }
        }
        std::sort(elems.begin(), elems.end());
        elems.erase(elems.begin()); // drop identity
        return elems;
    };

    if (n == 1) {
        for (uint32_t g = 1; g < count; ++g) {
            out.push_back({g});
        }
        return out;
    }
    for (uint32_t g1 = 1; g1 < count; ++g1) {
        for (uint32_t g2 = g1 + 1; g2 < count; ++g2) {
            if (!sp.commute(g1, g2)) {
                continue;
            }
            if (n == 2) {
                auto key = span_of({g1, g2});
                if (key.size() == 3 && !seen[key]) {
                    seen[key] = true;
                    out.push_back(key);
                }
                continue;
            }
            for (uint32_t g3 = g2 + 1; g3 < count; ++g3) {
                if (g3 == (g1 ^ g2) || !sp.commute(g1, g3) ||
                    !sp.commute(g2, g3)) {
                    continue;
                }
                auto key = span_of({g1, g2, g3});
                if (key.size() == 7 && !seen[key]) {
                    seen[key] = true;
                    out.push_back(key);
                }
            }
        }
    }
    return out;
}

// Independent generators of a subspace via GF(2) elimination on its elements.
std::vector<uint32_t> pick_generators(const std::vector<uint32_t>& elements,
                                      int n) {
    std::vector<uint32_t> slot(2 * static_cast<size_t>(n), 0);
    std::vector<uint32_t> gens;
    for (const uint32_t e : elements) {
        uint32_t v = e;
        for (int bit = 2 * n - 1; bit >= 0 && v != 0; --bit) {
            if (((v >> bit) & 1U) == 0) {
                continue;
            }
            if (slot[bit] == 0) {
                slot[bit] = v;
                gens.push_back(e);
                break;
            }
            v ^= slot[bit];
        }
        if (static_cast<int>(gens.size()) == n) {
            break;
        }
    }
    return gens;
}

} // namespace

std::vector<PureState> enumerate_stabilizer_states(int n) {
    check_small(n, 3, "enumerate_stabilizer_states");
    const size_t dim = size_t{1} << n;
    const auto subspaces = isotropic_subspaces(n);

    size_t expected = size_t{1} << n;
    for (int k = 1; k <= n; ++k) {
        expected *= (size_t{1} << k) + 1;
    }

    std::vector<PureState> states;
    states.reserve(expected);
    for (const auto& subspace : subspaces) {
        const std::vector<uint32_t> gens = pick_generators(subspace, n);
        if (static_cast<int>(gens.size()) != n) {
            throw std::logic_error("stabilizer enumeration: rank deficiency");
        }
        std::vector<Matrix> gen_mats;
        gen_mats.reserve(gens.size());
        for (const uint32_t g : gens) {
            gen_mats.push_back(pauli_matrix(n, g));
        }
        for (uint32_t signs = 0; signs < (1U << n); ++signs) {
            Matrix proj = identity(dim);
            for (int k = 0; k < n; ++k) {
                const double s = ((signs >> k) & 1U) ? -1.0 : 1.0;
                Matrix term = identity(dim);
                for (size_t i = 0; i < dim * dim; ++i) {
                    term[i] = 0.5 * (term[i] + s * gen_mats[k][i]);
                }
                proj = multiply(proj, term, dim);
            }
            // Rank-1 projector: take its largest column and normalize.
            size_t best = 0;
            double best_norm = -1.0;
            for (size_t j = 0; j < dim; ++j) {
                double col = 0.0;
                for (size_t i = 0; i < dim; ++i) {
                    col += std::norm(proj[i * dim + j]);
                }
                if (col > best_norm) {
                    best_norm = col;
                    best = j;
                }
            }
            if (best_norm < 1e-12) {
                throw std::logic_error("stabilizer enumeration: zero projector");
            }
            PureState s;
            s.n = n;
            s.amp.resize(dim);
            for (size_t i = 0; i < dim; ++i) {
                s.amp[i] = proj[i * dim + best];
            }
            const double nm = s.norm();
            std::complex<double> phase{1.0, 0.0};
            for (const auto& a : s.amp) {
                if (std::abs(a) > 1e-9) {
                    phase = a / std::abs(a);
                    break;
                }
            }
            for (auto& a : s.amp) {
                a /= nm * phase;
            }
            states.push_back(std::move(s));
        }
    }
    if (states.size() != expected) {
        throw std::logic_error("stabilizer enumeration: count mismatch");
    }
    return states;
}

std::vector<PureState> sample_magic_states(int n, double threshold,
                                           size_t count, Rng& rng,
                                           size_t max_attempts_per_state) {
    check_small(n, 6, "sample_magic_states");
    if (count == 0) {
        throw std::invalid_argument("sample_magic_states: count must be > 0");
    }
    const size_t dim = size_t{1} << n;
    std::vector<PureState> out;
    out.reserve(count);
    size_t attempts_left = max_attempts_per_state * count;
    while (out.size() < count) {
        if (attempts_left-- == 0) {
            throw std::runtime_error(
                "sample_magic_states: attempt cap exceeded");
        }
        PureState s;
        s.n = n;
        s.amp.resize(dim);
        for (auto& a : s.amp) {
            a = {rng.normal(), rng.normal()};
        }
        const double nm = s.norm();
        for (auto& a : s.amp) {
            a /= nm;
        }
        if (stabilizer_renyi_entropy(s) > threshold) {
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

// Random restarts + coordinate search on the generator angles. Whenever a
// move jumps across the target, CE is continuous along the segment, so a
// bisection lands inside the band.
PureState ce_targeted_state(int n, double target, double band, Rng& rng,
                            int max_restarts) {
    const HeaCircuit generator{n, 6};
    const PureState zero = zero_state(n);
    const size_t dim = generator.param_count();
    const auto ce_of = [&](const std::vector<double>& angles) {
        return concentratable_entanglement(apply_hea(zero, generator, angles));
    };
    const auto inside = [&](double ce) {
        return std::abs(ce - target) <= 0.5 * band;
    };

    for (int attempt = 0; attempt < max_restarts; ++attempt) {
        const double start_scale = target <= 0.1 ? 0.15 : 0.4;
        std::vector<double> theta(dim);
        for (auto& t : theta) {
            t = rng.uniform(-start_scale, start_scale);
        }
        double ce = ce_of(theta);
        if (inside(ce)) {
            return apply_hea(zero, generator, theta);
        }

        const auto bisect_segment = [&](std::vector<double> from, double ce_from,
                                        const std::vector<double>& to) {
            std::vector<double> probe(dim);
            double lo = 0.0;
            double hi = 1.0;
            for (int iter = 0; iter < 60; ++iter) {
                const double mid = 0.5 * (lo + hi);
                for (size_t i = 0; i < dim; ++i) {
                    probe[i] = from[i] + mid * (to[i] - from[i]);
                }
                const double c = ce_of(probe);
                if (inside(c)) {
                    return apply_hea(zero, generator, probe);
                }
                if ((c < target) == (ce_from < target)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            throw std::runtime_error("ce bisection failed to converge");
        };

        double step = 0.5;
        int stalls = 0;
        std::vector<double> candidate(dim);
        while (stalls < 4) {
            bool improved = false;
            for (size_t k = 0; k < dim; ++k) {
                for (const double sgn : {1.0, -1.0}) {
                    candidate = theta;
                    candidate[k] += sgn * step;
                    const double c = ce_of(candidate);
                    if (inside(c)) {
                        return apply_hea(zero, generator, candidate);
                    }
                    if ((c < target) != (ce < target)) {
                        return bisect_segment(theta, ce, candidate);
                    }
                    if (std::abs(c - target) < std::abs(ce - target)) {
                        theta = candidate;
                        ce = c;
                        improved = true;
                    }
                }
            }
            if (!improved) {
                step *= 0.5;
                ++stalls;
            }
        }
    }
    throw std::runtime_error("generate_ce_dataset: target band unreachable");
}

} // namespace

LabeledQuantumSet generate_ce_dataset(size_t count, Rng& rng, int n,
                                      double low_target, double high_target,
                                      double band) {
    if (count == 0 || count % 2 != 0) {
        throw std::invalid_argument("generate_ce_dataset: count must be even");
    }
    LabeledQuantumSet set;
    set.states.reserve(count);
    set.labels.reserve(count);
    double low_sum = 0.0;
    double high_sum = 0.0;
    for (size_t i = 0; i < count / 2; ++i) {
        Rng state_rng = rng.stream("ce-low", i);
        PureState s = ce_targeted_state(n, low_target, band, state_rng, 50);
        low_sum += concentratable_entanglement(s);
        set.states.push_back(std::move(s));
        set.labels.push_back(-1);
    }
    for (size_t i = 0; i < count / 2; ++i) {
        Rng state_rng = rng.stream("ce-high", i);
        PureState s = ce_targeted_state(n, high_target, band, state_rng, 50);
        high_sum += concentratable_entanglement(s);
        set.states.push_back(std::move(s));
        set.labels.push_back(+1);
    }
    nlohmann::json meta;
    meta["task"] = "ce";
    meta["n"] = n;
    meta["low_target"] = low_target;
    meta["high_target"] = high_target;
    meta["band"] = band;
    meta["low_class_mean_ce"] = low_sum / static_cast<double>(count / 2);
    meta["high_class_mean_ce"] = high_sum / static_cast<double>(count / 2);
    set.meta_json = meta.dump();
    return set;
}

LabeledQuantumSet generate_magic_dataset(size_t count, Rng& rng, int n,
                                         double threshold) {
    if (count == 0 || count % 2 != 0) {
        throw std::invalid_argument(
            "generate_magic_dataset: count must be even");
    }
    LabeledQuantumSet set;
    const size_t half = count / 2;

    std::vector<PureState> stabilizers = enumerate_stabilizer_states(n);
    if (half > stabilizers.size()) {
        throw std::invalid_argument(
            "generate_magic_dataset: not enough stabilizer states");
    }
    Rng pick = rng.stream("stabilizer-pick");
    std::vector<size_t> order = pick.permutation(stabilizers.size());
    double stab_sum = 0.0;
    for (size_t i = 0; i < half; ++i) {
        PureState& s = stabilizers[order[i]];
        stab_sum += stabilizer_renyi_entropy(s);
        set.states.push_back(std::move(s));
        set.labels.push_back(-1);
    }

    Rng haar = rng.stream("haar");
    std::vector<PureState> magic = sample_magic_states(n, threshold, half, haar);
    double magic_sum = 0.0;
    for (PureState& s : magic) {
        magic_sum += stabilizer_renyi_entropy(s);
        set.states.push_back(std::move(s));
        set.labels.push_back(+1);
    }

    nlohmann::json meta;
    meta["task"] = "magic";
    meta["n"] = n;
    meta["threshold"] = threshold;
    meta["stabilizer_mean_sre"] = stab_sum / static_cast<double>(half);
    meta["magic_mean_sre"] = magic_sum / static_cast<double>(half);
    set.meta_json = meta.dump();
    return set;
}

namespace {

std::pair<std::vector<size_t>, std::vector<size_t>> class_pools(
    const std::vector<int>& labels, Rng& rng) {
    std::vector<size_t> neg;
    std::vector<size_t> pos;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == -1) {
            neg.push_back(i);
        } else if (labels[i] == 1) {
            pos.push_back(i);
        } else {
            throw std::invalid_argument("partition: labels must be -1/+1");
        }
    }
    rng.shuffle(neg);
    rng.shuffle(pos);
    return {std::move(neg), std::move(pos)};
}

} // namespace

ClientPartition partition_iid(const std::vector<int>& labels, size_t clients,
                              size_t per_client, Rng& rng) {
    if (per_client % 2 != 0) {
        throw std::invalid_argument("partition_iid: per_client must be even");
    }
    std::vector<std::pair<size_t, size_t>> counts(
        clients, {per_client / 2, per_client / 2});
    return partition_counts(labels, counts, rng);
}

ClientPartition partition_counts(
    const std::vector<int>& labels,
    const std::vector<std::pair<size_t, size_t>>& counts, Rng& rng) {
    auto [neg, pos] = class_pools(labels, rng);
    size_t need_neg = 0;
    size_t need_pos = 0;
    for (const auto& [a, b] : counts) {
        need_neg += a;
        need_pos += b;
    }
    if (need_neg > neg.size() || need_pos > pos.size()) {
        throw std::invalid_argument("partition: insufficient data");
    }
    ClientPartition part;
    part.assignments.resize(counts.size());
    size_t ni = 0;
    size_t pi = 0;
    for (size_t c = 0; c < counts.size(); ++c) {
        auto& dest = part.assignments[c];
        for (size_t k = 0; k < counts[c].first; ++k) {
            dest.push_back(neg[ni++]);
        }
        for (size_t k = 0; k < counts[c].second; ++k) {
            dest.push_back(pos[pi++]);
        }
    }
    return part;
}

void save_labeled_set(const std::filesystem::path& dir,
                      const std::string& name, const LabeledQuantumSet& set) {
    std::filesystem::create_directories(dir);
    save_states(dir / (name + ".qstv"), set.states);
    nlohmann::json manifest;
    manifest["labels"] = set.labels;
    manifest["meta"] = set.meta_json.empty()
                           ? nlohmann::json::object()
                           : nlohmann::json::parse(set.meta_json);
    std::ofstream os(dir / (name + ".json"), std::ios::trunc);
    os << manifest.dump(2) << '\n';
}

LabeledQuantumSet load_labeled_set(const std::filesystem::path& dir,
                                   const std::string& name) {
    LabeledQuantumSet set;
    set.states = load_states(dir / (name + ".qstv"));
    std::ifstream is(dir / (name + ".json"));
    if (!is) {
        throw std::runtime_error("load_labeled_set: missing manifest");
    }
    nlohmann::json manifest;
    is >> manifest;
    set.labels = manifest["labels"].get<std::vector<int>>();
    set.meta_json = manifest["meta"].dump();
    if (set.labels.size() != set.states.size()) {
        throw std::runtime_error("load_labeled_set: label/state count mismatch");
    }
    return set;
}

} // namespace qkdfl
