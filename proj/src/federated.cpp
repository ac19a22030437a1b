// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/federated.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <stdexcept>

namespace qkdfl {

QuantConfig FedConfig::quant() const {
    QuantConfig qc;
    qc.q = q;
    qc.beta = beta;
    qc.headroom = headroom >= 0 ? headroom
                                : static_cast<int64_t>((k_sel + 1) / 2);
    return qc;
}

void FedConfig::validate() const {
    if (clients == 0 || k_sel == 0 || k_sel > clients) {
        throw std::invalid_argument("FedConfig: need 1 <= k_sel <= clients");
    }
    if (rounds == 0 || tau == 0 || batch == 0) {
        throw std::invalid_argument("FedConfig: rounds, tau, batch must be >= 1");
    }
    quant().validate();
}

std::vector<std::vector<uint16_t>> pregenerate_subsets(size_t clients,
                                                       size_t k_sel,
                                                       size_t rounds,
                                                       Rng& rng) {
    if (k_sel > clients) {
        throw std::invalid_argument("pregenerate_subsets: k_sel > clients");
    }
    std::vector<uint16_t> all(clients);
    for (size_t i = 0; i < clients; ++i) {
        all[i] = static_cast<uint16_t>(i);
    }
    std::vector<std::vector<uint16_t>> subsets(rounds);
    for (size_t t = 0; t < rounds; ++t) {
        // Partial Fisher-Yates: the first k_sel entries are a uniform sample
        // without replacement.
        for (size_t i = 0; i < k_sel; ++i) {
            const size_t j = i + rng.below(clients - i);
            std::swap(all[i], all[j]);
        }
        subsets[t].assign(all.begin(),
                          all.begin() + static_cast<ptrdiff_t>(k_sel));
        std::sort(subsets[t].begin(), subsets[t].end());
    }
    return subsets;
}

FedRunner::FedRunner(FedConfig cfg,
                     std::vector<std::unique_ptr<ModelAdapter>> client_models,
                     std::unique_ptr<ModelAdapter> evaluator)
    : cfg_(std::move(cfg)), clients_(std::move(client_models)),
      evaluator_(std::move(evaluator)) {
    cfg_.validate();
    if (clients_.size() != cfg_.clients) {
        throw std::invalid_argument("FedRunner: adapter count != clients");
    }
    if (!evaluator_) {
        throw std::invalid_argument("FedRunner: evaluator required");
    }
    if (cfg_.mode == AggregationMode::Masked) {
        keys_ = make_key_provider(cfg_.key_provider,
                                  Rng(cfg_.seed).stream("pair-keys").seed(),
                                  cfg_.key_dir);
    }
}

RunResult FedRunner::run(
    const std::function<void(const RoundMetrics&)>& on_round) {
    const QuantConfig qc = cfg_.quant();
    const size_t dim = evaluator_->param_count();
    std::vector<double> global = evaluator_->get_params();

    Rng master(cfg_.seed);
    Rng subset_rng = master.stream("subset-selection");
    const auto subsets =
        pregenerate_subsets(cfg_.clients, cfg_.k_sel, cfg_.rounds, subset_rng);

    RunResult result;
    result.metrics.reserve(cfg_.rounds);

    for (size_t t = 0; t < cfg_.rounds; ++t) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<uint16_t>& selected = subsets[t];

        size_t total_samples = 0;
        for (const uint16_t i : selected) {
            total_samples += clients_[i]->local_sample_count();
        }
        if (total_samples == 0) {
            throw std::runtime_error("FedRunner: selected clients hold no data");
        }

        // Pairwise key material for this round, one take per pair.
        std::map<std::pair<uint16_t, uint16_t>, PairKeyMaterial> pair_keys;
        if (cfg_.mode == AggregationMode::Masked) {
            for (size_t a = 0; a < selected.size(); ++a) {
                for (size_t b = a + 1; b < selected.size(); ++b) {
                    const uint16_t lo = selected[a];
                    const uint16_t hi = selected[b];
                    pair_keys.emplace(
                        std::make_pair(lo, hi),
                        keys_->take(static_cast<uint32_t>(t), lo, hi, dim,
                                    qc.q));
                }
            }
            if (selected.size() > 1) {
                ledger_.charge(static_cast<uint32_t>(t), selected.size(), dim,
                               qc.q);
            }
        }

        struct ClientOut {
            std::vector<int64_t> levels;      // quantized clipped update
            std::vector<double> float_contrib; // Float mode only
            double inf_norm = 0.0;
        };

        const auto run_client = [&](uint16_t i) {
            ModelAdapter& model = *clients_[i];
            model.set_params(global);
            model.reset_optimizer();
            Rng train_rng = master.stream("local-train",
                                          t * cfg_.clients + i);
            for (size_t epoch = 0; epoch < cfg_.tau; ++epoch) {
                model.train_epoch(cfg_.batch, train_rng);
            }
            const std::vector<double> updated = model.get_params();
            const double p_i =
                static_cast<double>(model.local_sample_count()) /
                static_cast<double>(total_samples);
            ClientOut out;
            std::vector<double> weighted(dim);
            for (size_t k = 0; k < dim; ++k) {
                weighted[k] = p_i * (updated[k] - global[k]);
                out.inf_norm = std::max(out.inf_norm, std::abs(weighted[k]));
            }
            if (cfg_.mode == AggregationMode::Float) {
                out.float_contrib = std::move(weighted);
            } else {
                for (auto& w : weighted) {
                    w = clip(w, qc.beta);
                }
                out.levels = quantize_vector(weighted, qc);
            }
            return out;
        };

        std::vector<std::future<ClientOut>> futures;
        futures.reserve(selected.size());
        for (const uint16_t i : selected) {
            futures.push_back(std::async(std::launch::async, run_client, i));
        }
        std::vector<ClientOut> outs;
        outs.reserve(selected.size());
        double round_inf_norm = 0.0;
        for (auto& f : futures) {
            outs.push_back(f.get());
            round_inf_norm = std::max(round_inf_norm, outs.back().inf_norm);
        }
        result.max_update_inf_norm.push_back(round_inf_norm);

        // Server side: aggregate and apply.
        std::vector<double> delta(dim, 0.0);
        if (cfg_.mode == AggregationMode::Float) {
            for (const ClientOut& o : outs) {
                for (size_t k = 0; k < dim; ++k) {
                    delta[k] += o.float_contrib[k];
                }
            }
        } else if (cfg_.mode == AggregationMode::Masked) {
            const auto lookup = [&pair_keys](uint16_t lo, uint16_t hi)
                -> const PairKeyMaterial& {
                const auto it = pair_keys.find({lo, hi});
                if (it == pair_keys.end()) {
                    throw KeyExhaustionError("missing pair key material");
                }
                return it->second;
            };
            std::vector<MaskedUpdate> uploads;
            uploads.reserve(selected.size());
            for (size_t s = 0; s < selected.size(); ++s) {
                const std::vector<int64_t> mask = derive_mask_vector(
                    selected[s], selected, dim, qc.q, lookup);
                uploads.push_back(mask_update(outs[s].levels, mask, qc.q,
                                              static_cast<uint32_t>(t),
                                              selected[s]));
            }
            const std::vector<int64_t> agg = aggregate(uploads, selected);
            delta = dequantize_vector(agg, qc);
        } else {
            // Quantized but unmasked: same integer arithmetic as the masked
            // path so the aggregates are bit-identical.
            const uint64_t wrap = uint64_t{1} << qc.q;
            std::vector<uint64_t> sum(dim, 0);
            for (const ClientOut& o : outs) {
                for (size_t k = 0; k < dim; ++k) {
                    sum[k] += static_cast<uint64_t>(o.levels[k]) & (wrap - 1);
                }
            }
            std::vector<int64_t> agg(dim);
            for (size_t k = 0; k < dim; ++k) {
                agg[k] = decode_residue(sum[k] & (wrap - 1), qc.q);
            }
            delta = dequantize_vector(agg, qc);
        }

        for (size_t k = 0; k < dim; ++k) {
            global[k] += delta[k];
        }

        RoundMetrics rm;
        rm.round = static_cast<uint32_t>(t);
        rm.key_bits = ledger_.total_bits();
        if (cfg_.evaluate_every_round || t + 1 == cfg_.rounds) {
            evaluator_->set_params(global);
            const EvalResult ev = evaluator_->evaluate_test();
            rm.test_accuracy = ev.accuracy;
            rm.test_loss = ev.loss;
        }
        rm.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
        result.metrics.push_back(rm);
        if (on_round) {
            on_round(rm);
        }
    }

    result.final_params = std::move(global);
    result.total_key_bits = ledger_.total_bits();
    result.ledger_json = ledger_.to_json();
    return result;
}

double convergence_bound(const ConvergenceInputs& ci) {
    if (!(ci.eta > 0.0) || !(ci.mu > 0.0) || !(ci.smoothness > 0.0)) {
        throw std::invalid_argument("convergence_bound: eta, mu, L must be > 0");
    }
    if (ci.eta * ci.mu >= 1.0) {
        throw std::invalid_argument("convergence_bound: eta * mu must be < 1");
    }
    if (ci.eta > 1.0 / ci.smoothness * (1.0 + 1e-12)) {
        throw std::invalid_argument("convergence_bound: requires eta <= 1/L");
    }
    const double contraction = 1.0 - ci.eta * ci.mu;
    const double total = std::pow(contraction, ci.rounds * ci.tau);
    const double per_round = 1.0 - std::pow(contraction, ci.tau);
    const double e_g = (ci.smoothness / ci.mu) * ci.eta * ci.sigma_sq /
                       (2.0 * ci.batch);
    const double e_q = ci.smoothness * ci.model_dim * ci.clients * ci.clients *
                       ci.delta_q * ci.delta_q / 6.0;
    return total * ci.init_gap + (1.0 - total) * (e_g + e_q / per_round);
}

} // namespace qkdfl
