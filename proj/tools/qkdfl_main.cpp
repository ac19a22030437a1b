// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: finite-key rate reports, key post-processing,
// federated training runs, dataset generation and run summaries.

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qkdfl/config.hpp"
#include "qkdfl/datasets.hpp"
#include "qkdfl/digits_fixture.hpp"
#include "qkdfl/experiments.hpp"
#include "qkdfl/qkd_rate.hpp"
#include "qkdfl/toeplitz.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitKeyBudget = 4;

using qkdfl::AggregationMode;

AggregationMode mode_from(const std::string& mode) {
    if (mode == "masked") {
        return AggregationMode::Masked;
    }
    if (mode == "plain") {
        return AggregationMode::QuantizedPlain;
    }
    return AggregationMode::Float;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<qkdfl::RoundMetrics>& metrics) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write metrics file: " + path.string());
    }
    os << "round,test_accuracy,test_loss,key_bits,wall_ms\n";
    os.precision(10);
    for (const auto& m : metrics) {
        os << m.round << ',' << m.test_accuracy << ',' << m.test_loss << ','
           << m.key_bits << ',' << m.wall_ms << '\n';
    }
}

int cmd_keyrate(const std::string& csv, const std::string& out,
                double pulses_override, double pulse_rate, double eps_f,
                double f_ec) {
    auto observations = qkdfl::read_observations_csv(csv);
    qkdfl::SecurityParams sec;
    sec.eps_f = eps_f;
    sec.f_ec = f_ec;

    const auto rates_at = [&](double scale) {
        std::vector<qkdfl::KeyRateResult> rows;
        for (auto obs : observations) {
            if (pulses_override > 0.0) {
                obs.pulses = pulses_override;
            }
            obs.pulses *= scale;
            rows.push_back(qkdfl::final_key_length(obs, sec, pulse_rate));
        }
        return rows;
    };

    const auto rows = rates_at(1.0);
    qkdfl::write_rate_report_csv(out, rows);

    // Sensitivity in the unstated per-pair pulse count N: rates at N/2 and 2N.
    const auto lo = rates_at(0.5);
    const auto hi = rates_at(2.0);
    const std::filesystem::path spath =
        std::filesystem::path(out).concat(".sensitivity.csv");
    std::ofstream os(spath, std::ios::trunc);
    os << "pair,rate_at_half_N,rate_at_N,rate_at_double_N\n";
    os.precision(10);
    for (size_t i = 0; i < rows.size(); ++i) {
        os << rows[i].pair << ',' << lo[i].rate_bit_per_pulse << ','
           << rows[i].rate_bit_per_pulse << ',' << hi[i].rate_bit_per_pulse
           << '\n';
    }
    std::cout << "wrote " << rows.size() << " pair rates to " << out
              << " (sensitivity: " << spath.string() << ")\n";
    return kExitOk;
}

int cmd_reconcile(size_t n, double e, uint64_t seed, size_t r,
                  const std::string& out_dir, uint32_t round_tag) {
    namespace fs = std::filesystem;
    if (r == 0 || r >= n || r % 8 != 0) {
        std::cerr << "reconcile: need 0 < r < n with r divisible by 8\n";
        return kExitConfig;
    }
    fs::create_directories(out_dir);

    qkdfl::Rng rng(seed);
    qkdfl::Rng key_rng = rng.stream("raw-key");
    qkdfl::RawKeyPair pair = qkdfl::inject_errors(n, e, key_rng);

    qkdfl::ReconcileResult rec;
    bool f_defined = e > 0.0;
    qkdfl::CascadeConfig cascade_cfg;
    cascade_cfg.shuffle_seed = rng.stream("cascade-shuffle-seed").seed();
    if (f_defined) {
        rec = qkdfl::cascade_reconcile(pair, e, cascade_cfg);
    } else {
        rec.key = pair.key_b;
        rec.success = true;
    }
    if (!rec.success) {
        std::cerr << "reconciliation failed; no key files written\n";
        return kExitRuntime;
    }

    qkdfl::Rng seed_rng = rng.stream("toeplitz-seed");
    const qkdfl::ToeplitzSeed tseed = qkdfl::ToeplitzSeed::random(n, r, seed_rng);
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<uint8_t> final_key = qkdfl::pa_fft(rec.key, tseed);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    // Both parties end with identical keys; emit the shared material once
    // per party for auditability (byte-identical files).
    std::vector<uint64_t> residues(r / 8);
    for (size_t k = 0; k < residues.size(); ++k) {
        uint64_t v = 0;
        for (int b = 0; b < 8; ++b) {
            v = (v << 1) | final_key[8 * k + static_cast<size_t>(b)];
        }
        residues[k] = v;
    }
    const auto material = qkdfl::PairKeyMaterial::from_residues(
        round_tag, 0, 1, 8, residues);
    qkdfl::write_key_material(
        fs::path(out_dir) / "party_a.qnqk", material);
    qkdfl::write_key_material(
        fs::path(out_dir) / "party_b.qnqk", material);

    nlohmann::json report;
    report["n"] = n;
    report["e_injected"] = e;
    report["leakage_bits"] = rec.leakage_bits;
    report["f_efficiency"] =
        f_defined ? nlohmann::json(rec.f_efficiency) : nlohmann::json();
    report["success"] = rec.success;
    report["r"] = r;
    report["throughput_bits_per_s"] = static_cast<double>(n) / elapsed;
    report["fft_fallback"] = qkdfl::pa_fft_used_fallback();
    report["cascade"] = {{"rounds", cascade_cfg.rounds},
                         {"block_ratio", cascade_cfg.block_ratio},
                         {"growth", cascade_cfg.growth},
                         {"binary_cost", "one parity per split level"},
                         {"trailing_block", "absorbed into last full block"},
                         {"queue_order", "smallest pending block first"}};
    std::ofstream os(fs::path(out_dir) / "reconcile_report.json",
                     std::ios::trunc);
    os << report.dump(2) << '\n';
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              int64_t seed_override) {
    qkdfl::RunConfig cfg = qkdfl::load_run_config(config_path);
    if (seed_override >= 0) {
        cfg.seed = static_cast<uint64_t>(seed_override);
    }
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    const AggregationMode mode = mode_from(cfg.mode);
    qkdfl::experiments::TaskResult result;
    const auto echo = [](const qkdfl::RoundMetrics& m) {
        if (m.round % 20 == 0) {
            std::cout << "round " << m.round << " acc " << m.test_accuracy
                      << " loss " << m.test_loss << '\n';
        }
    };

    if (cfg.task == "quadratic-bound") {
        qkdfl::experiments::QuadraticBoundOptions opt;
        opt.q = cfg.q;
        opt.tau = cfg.tau == 0 ? 1 : cfg.tau;
        opt.seed0 = cfg.seed;
        if (cfg.rounds != 0) {
            opt.rounds = cfg.rounds;
        }
        const auto res = qkdfl::experiments::run_quadratic_bound(opt);
        std::ofstream os(fs::path(out_dir) / "bound_vs_empirical.csv",
                         std::ios::trunc);
        os << "round,bound,empirical_mean\n";
        os.precision(12);
        for (size_t t = 0; t < res.bound.size(); ++t) {
            os << t << ',' << res.bound[t] << ',' << res.empirical_mean[t]
               << '\n';
        }
        std::cout << "empirical within bound: "
                  << (res.empirical_within_bound ? "yes" : "no") << '\n';
        return res.empirical_within_bound ? kExitOk : kExitRuntime;
    }

    if (cfg.task == "ce" || cfg.task == "magic") {
        const size_t rounds =
            cfg.rounds != 0 ? cfg.rounds : (cfg.task == "ce" ? 200 : 160);
        result = qkdfl::experiments::run_quantum_task(
            cfg.task, cfg.clients, cfg.q, rounds, cfg.seed, mode, echo);
    } else if (cfg.task == "mnist-qnn") {
        qkdfl::experiments::MnistQnnOptions opt;
        opt.train_images = cfg.train_images;
        opt.train_labels = cfg.train_labels;
        opt.test_images = cfg.test_images;
        opt.test_labels = cfg.test_labels;
        opt.neg_digit = cfg.digit_neg;
        opt.pos_digit = cfg.digit_pos;
        opt.iid = cfg.iid;
        opt.clients = cfg.clients;
        if (cfg.rounds != 0) {
            opt.rounds = cfg.rounds;
        }
        opt.q = cfg.q;
        opt.seed = cfg.seed;
        opt.mode = mode;
        result = qkdfl::experiments::run_mnist_qnn(opt, echo);
    } else { // mnist-classical
        qkdfl::experiments::MnistClassicalOptions opt;
        opt.train_images = cfg.train_images;
        opt.train_labels = cfg.train_labels;
        opt.test_images = cfg.test_images;
        opt.test_labels = cfg.test_labels;
        opt.clients = cfg.clients;
        if (cfg.k_sel != 0) {
            opt.k_sel = cfg.k_sel;
        }
        if (cfg.rounds != 0) {
            opt.rounds = cfg.rounds;
        }
        if (cfg.tau != 0) {
            opt.tau = cfg.tau;
        }
        if (cfg.batch != 0) {
            opt.batch = cfg.batch;
        }
        if (cfg.lr != 0.0) {
            opt.lr = cfg.lr;
        }
        opt.q = cfg.q;
        opt.beta = cfg.beta;
        opt.seed = cfg.seed;
        opt.mode = mode;
        result = qkdfl::experiments::run_mnist_classical(opt, echo);
    }

    write_metrics_csv(fs::path(out_dir) / "metrics.csv", result.run.metrics);
    {
        std::ofstream os(fs::path(out_dir) / "ledger.json", std::ios::trunc);
        os << result.run.ledger_json << '\n';
    }

    nlohmann::json manifest;
    manifest["task"] = cfg.task;
    manifest["clients"] = result.cfg.clients;
    manifest["k_sel"] = result.cfg.k_sel;
    manifest["rounds"] = result.cfg.rounds;
    manifest["tau"] = result.cfg.tau;
    manifest["batch"] = result.cfg.batch;
    manifest["lr"] = result.cfg.lr;
    manifest["optimizer"] = result.cfg.optimizer;
    manifest["q"] = result.cfg.q;
    manifest["beta"] = result.cfg.beta;
    manifest["headroom"] = result.cfg.quant().headroom;
    manifest["seed"] = cfg.seed;
    manifest["mode"] = cfg.mode;
    manifest["key_provider"] = cfg.key_provider;
    manifest["dataset_hash"] =
        qkdfl::experiments::to_hex(result.dataset_hash);
    manifest["data_meta"] = result.data_meta_json.empty()
                                ? nlohmann::json::object()
                                : nlohmann::json::parse(result.data_meta_json);
    manifest["total_key_bits"] = result.run.total_key_bits;
    manifest["final_accuracy"] = result.run.metrics.back().test_accuracy;
    manifest["final_loss"] = result.run.metrics.back().test_loss;
    manifest["nondeterministic_fields"] = {"wall_ms"};
    std::ofstream os(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    os << manifest.dump(2) << '\n';

    std::cout << "final accuracy " << result.run.metrics.back().test_accuracy
              << ", total key bits " << result.run.total_key_bits << '\n';
    return kExitOk;
}

int cmd_gen_data(const std::string& task, size_t count, uint64_t seed,
                 const std::string& out_dir, const std::string& source,
                 size_t test_count) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    qkdfl::Rng rng(seed);
    if (task == "ce") {
        auto set = qkdfl::generate_ce_dataset(count, rng);
        qkdfl::save_labeled_set(out_dir, "ce", set);
        std::cout << set.meta_json << '\n';
        return kExitOk;
    }
    if (task == "magic") {
        auto set = qkdfl::generate_magic_dataset(count, rng);
        qkdfl::save_labeled_set(out_dir, "magic", set);
        std::cout << set.meta_json << '\n';
        return kExitOk;
    }
    if (task == "stabilizers") {
        const auto states = qkdfl::enumerate_stabilizer_states(3);
        qkdfl::save_states(fs::path(out_dir) / "stabilizers3.qstv", states);
        double max_sre = 0.0;
        for (size_t i = 0; i < states.size(); i += 27) {
            max_sre = std::max(max_sre,
                               qkdfl::stabilizer_renyi_entropy(states[i]));
        }
        nlohmann::json manifest;
        manifest["count"] = states.size();
        manifest["sampled_max_sre"] = max_sre;
        std::ofstream os(fs::path(out_dir) / "stabilizers3.json",
                         std::ios::trunc);
        os << manifest.dump(2) << '\n';
        std::cout << manifest.dump(2) << '\n';
        return kExitOk;
    }
    if (task == "digits-idx") {
        qkdfl::DigitsFixtureOptions opt;
        opt.source_bin = source;
        opt.out_dir = out_dir;
        opt.train_count = count == 0 ? 60000 : count;
        opt.test_count = test_count;
        opt.seed = seed;
        qkdfl::generate_digits_idx(opt);
        std::cout << "wrote IDX fixture (" << opt.train_count << " train, "
                  << opt.test_count << " test) to " << out_dir << '\n';
        return kExitOk;
    }
    std::cerr << "unknown gen-data task: " << task << '\n';
    return kExitConfig;
}

int cmd_report(const std::string& metrics_path, const std::string& ledger) {
    std::ifstream is(metrics_path);
    if (!is) {
        std::cerr << "cannot open metrics file: " << metrics_path << '\n';
        return kExitConfig;
    }
    std::string line;
    std::getline(is, line); // header
    std::vector<std::array<double, 4>> rows;
    while (std::getline(is, line)) {
        std::array<double, 4> row{};
        std::istringstream ls(line);
        std::string field;
        std::getline(ls, field, ','); // round
        for (auto& v : row) {
            if (!std::getline(ls, field, ',')) {
                break;
            }
            v = std::stod(field);
        }
        rows.push_back(row);
    }
    if (rows.empty()) {
        std::cerr << "metrics file has no rows\n";
        return kExitConfig;
    }
    double best_acc = 0.0;
    for (const auto& r : rows) {
        best_acc = std::max(best_acc, r[0]);
    }
    const double final_loss = rows.back()[1];
    size_t settle = rows.size();
    for (size_t t = 0; t < rows.size(); ++t) {
        if (rows[t][1] <= 1.05 * final_loss) {
            settle = t;
            break;
        }
    }
    std::cout << "rounds: " << rows.size() << '\n'
              << "final accuracy: " << rows.back()[0] << '\n'
              << "best accuracy: " << best_acc << '\n'
              << "final loss: " << final_loss << '\n'
              << "rounds to within 5% of final loss: " << settle << '\n'
              << "total key bits: " << static_cast<uint64_t>(rows.back()[2])
              << '\n';
    if (!ledger.empty()) {
        std::ifstream ls(ledger);
        nlohmann::json j;
        ls >> j;
        std::cout << "ledger rounds: " << j.size() << '\n';
        if (!j.empty()) {
            std::cout << "ledger cumulative bits: "
                      << j.back()["cumulative_bits"].get<uint64_t>() << '\n';
        }
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantized one-time-pad secure aggregation for federated "
                 "learning, with a finite-key MDI-QKD rate engine and QKD "
                 "post-processing"};
    app.require_subcommand(1);

    std::string csv;
    std::string out = "keyrate_report.csv";
    double pulses = 0.0;
    double pulse_rate = 1e8;
    double eps_f = 1e-10;
    double f_ec = 1.16;
    auto* keyrate = app.add_subcommand("keyrate", "finite-key rate report");
    keyrate->add_option("--csv", csv, "observations CSV")->required();
    keyrate->add_option("--out", out, "output CSV path");
    keyrate->add_option("--pulses", pulses, "override total pulses N");
    keyrate->add_option("--pulse-rate", pulse_rate, "pulse rate in Hz");
    keyrate->add_option("--eps-f", eps_f, "concentration failure probability");
    keyrate->add_option("--f-ec", f_ec, "EC efficiency when lambda_EC absent");

    size_t rec_n = 100000;
    double rec_e = 0.01;
    uint64_t rec_seed = 1;
    size_t rec_r = 50000;
    std::string rec_out = "reconcile_out";
    uint32_t rec_round = 0;
    auto* reconcile =
        app.add_subcommand("reconcile", "cascade + privacy amplification");
    reconcile->add_option("--n", rec_n, "raw key length");
    reconcile->add_option("--e", rec_e, "error probability")
        ->check(CLI::Range(0.0, 0.499));
    reconcile->add_option("--seed", rec_seed, "master seed");
    reconcile->add_option("--r", rec_r, "final key length (multiple of 8)");
    reconcile->add_option("--out", rec_out, "output directory");
    reconcile->add_option("--round", rec_round, "round tag for key files");

    std::string train_config;
    std::string train_out = "train_out";
    int64_t train_seed = -1;
    auto* train = app.add_subcommand("train", "federated training run");
    train->add_option("--config", train_config, "run config path")->required();
    train->add_option("--out", train_out, "output directory");
    train->add_option("--seed", train_seed, "override config seed");

    std::string gen_task;
    size_t gen_count = 0;
    uint64_t gen_seed = 1;
    std::string gen_out = "data_out";
    std::string gen_source = "data/uci_digits_8x8.bin";
    size_t gen_test_count = 10000;
    auto* gen = app.add_subcommand("gen-data", "dataset generation");
    gen->add_option("--task", gen_task, "ce|magic|stabilizers|digits-idx")
        ->required();
    gen->add_option("--count", gen_count, "sample count");
    gen->add_option("--seed", gen_seed, "master seed");
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--source", gen_source, "digits-idx source asset");
    gen->add_option("--test-count", gen_test_count, "digits-idx test count");

    std::string rep_metrics;
    std::string rep_ledger;
    auto* report = app.add_subcommand("report", "summarize a metrics CSV");
    report->add_option("--metrics", rep_metrics, "metrics CSV")->required();
    report->add_option("--ledger", rep_ledger, "ledger JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (keyrate->parsed()) {
            return cmd_keyrate(csv, out, pulses, pulse_rate, eps_f, f_ec);
        }
        if (reconcile->parsed()) {
            return cmd_reconcile(rec_n, rec_e, rec_seed, rec_r, rec_out,
                                 rec_round);
        }
        if (train->parsed()) {
            return cmd_train(train_config, train_out, train_seed);
        }
        if (gen->parsed()) {
            return cmd_gen_data(gen_task, gen_count, gen_seed, gen_out,
                                gen_source, gen_test_count);
        }
        if (report->parsed()) {
            return cmd_report(rep_metrics, rep_ledger);
        }
    } catch (const qkdfl::KeyExhaustionError& e) {
        std::cerr << "key budget exhausted: " << e.what() << '\n';
        return kExitKeyBudget;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
