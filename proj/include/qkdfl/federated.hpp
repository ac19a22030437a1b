// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qkdfl/key_provider.hpp"
#include "qkdfl/model.hpp"
#include "qkdfl/quantize.hpp"
#include "qkdfl/rng.hpp"
#include "qkdfl/secure_agg.hpp"

namespace qkdfl {

/// How client updates travel to the server. Masked and QuantizedPlain
/// produce bit-identical aggregates; Float is the unquantized benchmark.
enum class AggregationMode { Masked, QuantizedPlain, Float };

struct FedConfig {
    size_t clients = 4;
    size_t k_sel = 4;   // participants per round
    size_t rounds = 200;
    size_t tau = 1;     // local epochs
    size_t batch = 32;
    double lr = 0.01;
    std::string optimizer = "adam";
    int q = 16;
    double beta = 1.0;
    int64_t headroom = -1; // -1: auto, ceil(k_sel / 2)
    uint64_t seed = 1;
    AggregationMode mode = AggregationMode::Masked;
    std::string key_provider = "simulated";
    std::string key_dir;
    bool evaluate_every_round = true;

    [[nodiscard]] QuantConfig quant() const;
    void validate() const;
};

/// T subsets of size k_sel drawn uniformly without replacement, seeded,
/// stored in ascending index order.
std::vector<std::vector<uint16_t>> pregenerate_subsets(size_t clients,
                                                       size_t k_sel,
                                                       size_t rounds,
                                                       Rng& rng);

struct RoundMetrics {
    uint32_t round = 0;
    double test_accuracy = 0.0;
    double test_loss = 0.0;
    uint64_t key_bits = 0; // cumulative
    double wall_ms = 0.0;
};

struct RunResult {
    std::vector<RoundMetrics> metrics;
    std::vector<double> final_params;
    uint64_t total_key_bits = 0;
    std::string ledger_json;
    std::vector<double> max_update_inf_norm; // per-round ||p * dtheta||_inf
};

/**
 * @brief Federated training driver.
 *
 * Owns one adapter per client plus a server-side evaluator. Each round:
 * selected clients train locally from the global parameters, weight their
 * update by their data share, clip, quantize, mask with pairwise one-time
 * pads, and upload; the server sums residues mod 2^q, decodes, dequantizes
 * and applies the update. Clients within a round run concurrently; the
 * trajectory is deterministic under (seed, config) because every client
 * draws from its own (round, client) substream and the aggregation is
 * order-insensitive.
 */
class FedRunner {
  public:
    FedRunner(FedConfig cfg,
              std::vector<std::unique_ptr<ModelAdapter>> client_models,
              std::unique_ptr<ModelAdapter> evaluator);

    RunResult run(const std::function<void(const RoundMetrics&)>& on_round = {});

  private:
    FedConfig cfg_;
    std::vector<std::unique_ptr<ModelAdapter>> clients_;
    std::unique_ptr<ModelAdapter> evaluator_;
    std::unique_ptr<KeyProvider> keys_;
    KeyLedger ledger_;
};

/// Inputs of the convergence-bound calculator (PL constant mu, smoothness L,
/// per-sample gradient variance sigma^2, quantizer step delta_q).
struct ConvergenceInputs {
    double init_gap = 0.0;
    double eta = 0.0;
    double mu = 0.0;
    double smoothness = 0.0; // L
    double sigma_sq = 0.0;
    double batch = 1.0;
    double tau = 1.0;
    double rounds = 0.0; // T
    double model_dim = 0.0;
    double clients = 0.0; // K
    double delta_q = 0.0;
};

/// (1-eta*mu)^{T tau} * init_gap
///   + [1 - (1-eta*mu)^{T tau}] * [E_g + E_q / (1 - (1-eta*mu)^tau)]
/// with E_g = (L/mu) * eta * sigma^2 / (2b), E_q = L M K^2 delta_q^2 / 6.
double convergence_bound(const ConvergenceInputs& ci);

} // namespace qkdfl
