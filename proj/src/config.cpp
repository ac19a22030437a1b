// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qkdfl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::map<std::string, std::string> parse_kv(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " +
                                        std::to_string(line_no) +
                                        ": expected key=value");
        }
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

void apply(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto to_u64 = [&] { return std::stoull(value); };
    const auto to_f = [&] { return std::stod(value); };
    if (key == "task") {
        cfg.task = value;
    } else if (key == "clients") {
        cfg.clients = to_u64();
    } else if (key == "k_sel") {
        cfg.k_sel = to_u64();
    } else if (key == "rounds") {
        cfg.rounds = to_u64();
    } else if (key == "tau") {
        cfg.tau = to_u64();
    } else if (key == "batch") {
        cfg.batch = to_u64();
    } else if (key == "lr") {
        cfg.lr = to_f();
    } else if (key == "q") {
        cfg.q = static_cast<int>(to_u64());
    } else if (key == "beta") {
        cfg.beta = to_f();
    } else if (key == "seed") {
        cfg.seed = to_u64();
    } else if (key == "key_provider") {
        cfg.key_provider = value;
    } else if (key == "key_dir") {
        cfg.key_dir = value;
    } else if (key == "mode") {
        cfg.mode = value;
    } else if (key == "train_images") {
        cfg.train_images = value;
    } else if (key == "train_labels") {
        cfg.train_labels = value;
    } else if (key == "test_images") {
        cfg.test_images = value;
    } else if (key == "test_labels") {
        cfg.test_labels = value;
    } else if (key == "digit_neg") {
        cfg.digit_neg = static_cast<int>(to_u64());
    } else if (key == "digit_pos") {
        cfg.digit_pos = static_cast<int>(to_u64());
    } else if (key == "iid") {
        cfg.iid = value == "true" || value == "1" || value == "yes";
    } else {
        throw std::invalid_argument("unknown config key: " + key);
    }
}

} // namespace

void RunConfig::validate() const {
    if (task != "ce" && task != "magic" && task != "mnist-qnn" &&
        task != "mnist-classical" && task != "quadratic-bound") {
        throw std::invalid_argument("config: unknown task '" + task + "'");
    }
    if (q != 8 && q != 16 && q != 32) {
        throw std::invalid_argument("config: q must be 8, 16 or 32");
    }
    if (mode != "masked" && mode != "plain" && mode != "float") {
        throw std::invalid_argument("config: mode must be masked|plain|float");
    }
    if (key_provider != "simulated" && key_provider != "real") {
        throw std::invalid_argument(
            "config: key_provider must be simulated|real");
    }
    if (!(beta > 0.0)) {
        throw std::invalid_argument("config: beta must be positive");
    }
    const bool needs_mnist = task == "mnist-qnn" || task == "mnist-classical";
    if (needs_mnist) {
        for (const std::string& p :
             {train_images, train_labels, test_images, test_labels}) {
            if (p.empty()) {
                throw std::invalid_argument(
                    "config: mnist tasks need train/test image and label paths");
            }
            if (!std::filesystem::exists(p)) {
                throw std::invalid_argument("config: missing data file " + p);
            }
        }
    }
    if (key_provider == "real") {
        if (key_dir.empty() || !std::filesystem::is_directory(key_dir)) {
            throw std::invalid_argument(
                "config: real key provider needs an existing key_dir");
        }
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::invalid_argument("cannot open config file: " +
                                    path.string());
    }
    RunConfig cfg;
    // Peek: a leading '{' selects the JSON reader.
    char first = 0;
    is >> std::ws;
    first = static_cast<char>(is.peek());
    if (first == '{') {
        nlohmann::json j;
        is >> j;
        for (const auto& [key, value] : j.items()) {
            if (value.is_string()) {
                apply(cfg, key, value.get<std::string>());
            } else if (value.is_boolean()) {
                apply(cfg, key, value.get<bool>() ? "true" : "false");
            } else {
                std::ostringstream os;
                os << value;
                apply(cfg, key, os.str());
            }
        }
    } else {
        for (const auto& [key, value] : parse_kv(is)) {
            apply(cfg, key, value);
        }
    }
    cfg.validate();
    return cfg;
}

} // namespace qkdfl
