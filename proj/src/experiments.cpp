// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace qkdfl::experiments {

std::string to_hex(uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(value));
    return buf;
}

uint64_t fnv1a_hash(const void* data, size_t bytes, uint64_t seed) {
    const auto* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

uint64_t hash_quantum_data(const QuantumData& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const PureState& s : data.inputs) {
        h = fnv1a_hash(s.amp.data(), s.amp.size() * sizeof(s.amp[0]), h);
    }
    h = fnv1a_hash(data.labels.data(), data.labels.size() * sizeof(int), h);
    return h;
}

std::shared_ptr<QuantumData> embed_doubled(const LabeledQuantumSet& set,
                                           const std::vector<size_t>& idx) {
    auto out = std::make_shared<QuantumData>();
    out->inputs.reserve(idx.size());
    out->labels.reserve(idx.size());
    for (const size_t i : idx) {
        out->inputs.push_back(parallel_double(set.states[i]));
        out->labels.push_back(set.labels[i]);
    }
    return out;
}

std::vector<size_t> iota_indices(size_t n) {
    std::vector<size_t> v(n);
    for (size_t i = 0; i < n; ++i) {
        v[i] = i;
    }
    return v;
}

} // namespace

TaskResult run_quantum_task(const std::string& task, size_t clients, int q,
                            size_t rounds, uint64_t seed, AggregationMode mode,
                            const ProgressFn& progress) {
    if (task != "ce" && task != "magic") {
        throw std::invalid_argument("run_quantum_task: task must be ce|magic");
    }
    if (clients < 1 || clients > 4) {
        throw std::invalid_argument("run_quantum_task: clients must be 1..4");
    }
    const size_t per_client = task == "ce" ? 160 : 120;
    const size_t test_count = task == "ce" ? 200 : 120;
    // Datasets are generated for the maximum client count so that a k-client
    // run uses exactly the first k clients' shares of the same pool.
    const size_t max_clients = 4;
    Rng data_rng = Rng(seed).stream("quantum-data-" + task);

    LabeledQuantumSet train_set;
    LabeledQuantumSet test_set;
    if (task == "ce") {
        train_set = generate_ce_dataset(per_client * max_clients, data_rng);
        Rng test_rng = data_rng.stream("test");
        test_set = generate_ce_dataset(test_count, test_rng);
    } else {
        train_set = generate_magic_dataset(per_client * max_clients, data_rng);
        Rng test_rng = data_rng.stream("test");
        test_set = generate_magic_dataset(test_count, test_rng);
    }

    Rng part_rng = data_rng.stream("partition");
    const ClientPartition partition = partition_iid(
        train_set.labels, max_clients, per_client, part_rng);

    const HeaCircuit circuit{2 * train_set.states[0].n, 4};
    FedConfig cfg;
    cfg.clients = clients;
    cfg.k_sel = clients;
    cfg.rounds = rounds;
    cfg.tau = 1;
    cfg.batch = 32;
    cfg.lr = 0.01;
    cfg.optimizer = "adam";
    cfg.q = q;
    cfg.beta = 1.0;
    cfg.seed = seed;
    cfg.mode = mode;

    auto test_data = embed_doubled(test_set, iota_indices(test_set.states.size()));

    Rng init_rng = Rng(seed).stream("model-init");
    std::vector<double> init_params(circuit.param_count());
    for (auto& p : init_params) {
        p = 0.1 * init_rng.normal();
    }

    std::vector<std::unique_ptr<ModelAdapter>> adapters;
    uint64_t data_hash = 0;
    for (size_t c = 0; c < clients; ++c) {
        auto local = embed_doubled(train_set, partition.assignments[c]);
        data_hash = fnv1a_hash(&c, sizeof(c), data_hash ^ hash_quantum_data(*local));
        Rng dummy(0);
        auto model = std::make_unique<QnnModel>(circuit, local, test_data,
                                                cfg.optimizer, cfg.lr, dummy);
        model->set_params(init_params);
        adapters.push_back(std::move(model));
    }
    Rng dummy(0);
    auto evaluator = std::make_unique<QnnModel>(circuit, nullptr, test_data,
                                                cfg.optimizer, cfg.lr, dummy);
    evaluator->set_params(init_params);

    FedRunner runner(cfg, std::move(adapters), std::move(evaluator));
    TaskResult result;
    result.run = runner.run(progress);
    result.cfg = cfg;
    result.data_meta_json = train_set.meta_json;
    result.dataset_hash = data_hash;
    return result;
}

namespace {

std::shared_ptr<QuantumData> embed_vectors(const LabeledVectors& data,
                                           const std::vector<size_t>& idx,
                                           int qubits) {
    auto out = std::make_shared<QuantumData>();
    out->inputs.reserve(idx.size());
    out->labels.reserve(idx.size());
    for (const size_t i : idx) {
        out->inputs.push_back(amplitude_embed(data.x[i], qubits));
        out->labels.push_back(data.labels[i]);
    }
    return out;
}

} // namespace

TaskResult run_mnist_qnn(const MnistQnnOptions& opt,
                         const ProgressFn& progress) {
    const LabeledVectors train = mnist_two_class(
        opt.train_images, opt.train_labels, opt.neg_digit, opt.pos_digit, 4);
    const LabeledVectors test_all = mnist_two_class(
        opt.test_images, opt.test_labels, opt.neg_digit, opt.pos_digit, 4);

    Rng data_rng = Rng(opt.seed).stream("mnist-qnn-data");
    ClientPartition partition;
    if (opt.iid) {
        partition = partition_iid(train.labels, opt.clients, opt.per_client,
                                  data_rng);
    } else {
        if (opt.clients != 4) {
            throw std::invalid_argument(
                "run_mnist_qnn: the non-IID splits are defined for 4 clients");
        }
        const std::vector<std::pair<size_t, size_t>> splits = {
            {200, 300}, {300, 200}, {167, 333}, {333, 167}};
        partition = partition_counts(train.labels, splits, data_rng);
    }

    // Balanced server test subset of the requested size.
    Rng test_rng = data_rng.stream("test-pick");
    const ClientPartition test_pick =
        partition_iid(test_all.labels, 1, opt.test_count, test_rng);

    const int qubits = 4;
    const HeaCircuit circuit{qubits, 3};
    FedConfig cfg;
    cfg.clients = opt.clients;
    cfg.k_sel = opt.clients;
    cfg.rounds = opt.rounds;
    cfg.tau = 1;
    cfg.batch = 50;
    cfg.lr = 0.01;
    cfg.optimizer = "adam";
    cfg.q = opt.q;
    cfg.beta = 1.0;
    cfg.seed = opt.seed;
    cfg.mode = opt.mode;

    auto test_data = embed_vectors(test_all, test_pick.assignments[0], qubits);

    Rng init_rng = Rng(opt.seed).stream("model-init");
    std::vector<double> init_params(circuit.param_count());
    for (auto& p : init_params) {
        p = 0.1 * init_rng.normal();
    }

    std::vector<std::unique_ptr<ModelAdapter>> adapters;
    uint64_t data_hash = 0;
    for (size_t c = 0; c < opt.clients; ++c) {
        auto local = embed_vectors(train, partition.assignments[c], qubits);
        data_hash = fnv1a_hash(&c, sizeof(c), data_hash ^ hash_quantum_data(*local));
        Rng dummy(0);
        auto model = std::make_unique<QnnModel>(circuit, local, test_data,
                                                cfg.optimizer, cfg.lr, dummy);
        model->set_params(init_params);
        adapters.push_back(std::move(model));
    }
    Rng dummy(0);
    auto evaluator = std::make_unique<QnnModel>(circuit, nullptr, test_data,
                                                cfg.optimizer, cfg.lr, dummy);
    evaluator->set_params(init_params);

    FedRunner runner(cfg, std::move(adapters), std::move(evaluator));
    TaskResult result;
    result.run = runner.run(progress);
    result.cfg = cfg;
    nlohmann::json meta;
    meta["task"] = "mnist-qnn";
    meta["digits"] = {opt.neg_digit, opt.pos_digit};
    meta["iid"] = opt.iid;
    result.data_meta_json = meta.dump();
    result.dataset_hash = data_hash;
    return result;
}

TaskResult run_mnist_classical(const MnistClassicalOptions& opt,
                               const ProgressFn& progress) {
    const LabeledVectors train = mnist_full(opt.train_images, opt.train_labels);
    const LabeledVectors test = mnist_full(opt.test_images, opt.test_labels);

    if (train.x.size() < opt.clients * opt.per_client) {
        throw std::invalid_argument(
            "run_mnist_classical: training set too small for the split");
    }
    Rng data_rng = Rng(opt.seed).stream("mnist-classical-data");
    std::vector<size_t> order = data_rng.permutation(train.x.size());

    const size_t input_dim = train.x[0].size();
    const size_t classes = 10;
    FedConfig cfg;
    cfg.clients = opt.clients;
    cfg.k_sel = opt.k_sel;
    cfg.rounds = opt.rounds;
    cfg.tau = opt.tau;
    cfg.batch = opt.batch;
    cfg.lr = opt.lr;
    cfg.optimizer = "adam";
    cfg.q = opt.q;
    cfg.beta = opt.beta;
    cfg.seed = opt.seed;
    cfg.mode = opt.mode;

    auto test_data = std::make_shared<VectorData>();
    test_data->x = test.x;
    test_data->labels = test.labels;

    Rng init_rng = Rng(opt.seed).stream("model-init");
    auto evaluator = std::make_unique<MlpModel>(
        input_dim, opt.hidden, classes, nullptr, test_data, cfg.optimizer,
        cfg.lr, init_rng);
    const std::vector<double> init_params = evaluator->get_params();

    std::vector<std::unique_ptr<ModelAdapter>> adapters;
    adapters.reserve(opt.clients);
    uint64_t data_hash = 0;
    for (size_t c = 0; c < opt.clients; ++c) {
        auto local = std::make_shared<VectorData>();
        local->x.reserve(opt.per_client);
        local->labels.reserve(opt.per_client);
        for (size_t k = 0; k < opt.per_client; ++k) {
            const size_t idx = order[c * opt.per_client + k];
            local->x.push_back(train.x[idx]);
            local->labels.push_back(train.labels[idx]);
            data_hash = fnv1a_hash(&idx, sizeof(idx), data_hash);
        }
        Rng dummy(0);
        auto model = std::make_unique<MlpModel>(input_dim, opt.hidden, classes,
                                                local, test_data,
                                                cfg.optimizer, cfg.lr, dummy);
        model->set_params(init_params);
        adapters.push_back(std::move(model));
    }

    FedRunner runner(cfg, std::move(adapters), std::move(evaluator));
    TaskResult result;
    result.run = runner.run(progress);
    result.cfg = cfg;
    nlohmann::json meta;
    meta["task"] = "mnist-classical";
    meta["hidden"] = opt.hidden;
    meta["model_params"] = input_dim * opt.hidden + opt.hidden +
                           opt.hidden * classes + classes;
    result.data_meta_json = meta.dump();
    result.dataset_hash = data_hash;
    return result;
}

QuadraticBoundResult run_quadratic_bound(const QuadraticBoundOptions& opt) {
    QuadraticBoundResult out;
    const size_t dim = opt.dim;
    std::vector<double> lambdas(dim);
    for (size_t i = 0; i < dim; ++i) {
        lambdas[i] = opt.mu + (opt.smoothness - opt.mu) *
                                  static_cast<double>(i) /
                                  static_cast<double>(dim - 1);
    }
    std::vector<double> theta0(dim, 0.5);
    double init_gap = 0.0;
    for (size_t i = 0; i < dim; ++i) {
        init_gap += 0.5 * lambdas[i] * theta0[i] * theta0[i];
    }

    FedConfig cfg;
    cfg.clients = opt.clients;
    cfg.k_sel = opt.clients;
    cfg.rounds = opt.rounds;
    cfg.tau = opt.tau;
    cfg.batch = opt.batch;
    cfg.lr = opt.eta;
    cfg.optimizer = "sgd";
    cfg.q = opt.q;
    cfg.beta = opt.beta;
    cfg.mode = AggregationMode::Masked;
    cfg.evaluate_every_round = true;

    ConvergenceInputs ci;
    ci.init_gap = init_gap;
    ci.eta = opt.eta;
    ci.mu = opt.mu;
    ci.smoothness = opt.smoothness;
    ci.sigma_sq = opt.sigma_sq;
    ci.batch = static_cast<double>(opt.batch);
    ci.tau = static_cast<double>(opt.tau);
    ci.model_dim = static_cast<double>(dim);
    ci.clients = static_cast<double>(opt.clients);
    ci.delta_q = cfg.quant().step();

    out.bound.resize(opt.rounds + 1);
    for (size_t t = 0; t <= opt.rounds; ++t) {
        ci.rounds = static_cast<double>(t);
        out.bound[t] = convergence_bound(ci);
    }

    std::vector<double> sums(opt.rounds + 1, 0.0);
    for (size_t s = 0; s < opt.seeds; ++s) {
        cfg.seed = opt.seed0 + s;
        std::vector<std::unique_ptr<ModelAdapter>> adapters;
        for (size_t c = 0; c < opt.clients; ++c) {
            adapters.push_back(std::make_unique<QuadraticModel>(
                lambdas, opt.sigma_sq, opt.eta, theta0));
        }
        auto evaluator = std::make_unique<QuadraticModel>(
            lambdas, opt.sigma_sq, opt.eta, theta0);
        FedRunner runner(cfg, std::move(adapters), std::move(evaluator));
        const RunResult run = runner.run();
        sums[0] += init_gap;
        for (size_t t = 0; t < opt.rounds; ++t) {
            sums[t + 1] += run.metrics[t].test_loss; // f* = 0 by construction
        }
    }
    out.empirical_mean.resize(opt.rounds + 1);
    for (size_t t = 0; t <= opt.rounds; ++t) {
        out.empirical_mean[t] = sums[t] / static_cast<double>(opt.seeds);
        if (out.empirical_mean[t] > out.bound[t]) {
            out.empirical_within_bound = false;
        }
    }
    return out;
}

} // namespace qkdfl::experiments
