// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkdfl/qkd_rate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qkdfl {

void KeyRateObservation::validate() const {
    if (!(mu > 0.0)) {
        throw std::invalid_argument("observation " + pair + ": mu must be > 0");
    }
    if (m_x > n_x || m_y > n_y || n_x + n_y > n_tot) {
        throw std::invalid_argument("observation " + pair +
                                    ": inconsistent counts");
    }
    if (!(pulses >= static_cast<double>(n_tot)) || !(pulses > 0.0)) {
        throw std::invalid_argument("observation " + pair +
                                    ": N must be >= n_tot");
    }
}

double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) {
        throw std::domain_error("binary_entropy: argument outside [0, 1]");
    }
    if (x == 0.0 || x == 1.0) {
        return 0.0;
    }
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double basis_fidelity(double mu) {
    using cd = std::complex<double>;
    const double a = std::sqrt(mu);
    const auto overlap = [](cd alpha, cd beta) {
        return std::exp(-std::norm(alpha) / 2.0 - std::norm(beta) / 2.0 +
                        std::conj(alpha) * beta);
    };
    const cd i(0.0, 1.0);
    // <Psi_X|Psi_Y> as the average over the four phase pairs.
    const cd inner = 0.25 * ((1.0 - i) * overlap(a, i * a) +
                             (1.0 - i) * overlap(-a, -i * a) +
                             (1.0 + i) * overlap(a, -i * a) +
                             (1.0 + i) * overlap(-a, i * a));
    return std::norm(inner);
}

double delta_imbalance(double mu, double total_gain) {
    if (!(total_gain > 0.0)) {
        throw std::domain_error("delta_imbalance: gain must be positive");
    }
    return (1.0 - basis_fidelity(mu)) / (2.0 * total_gain);
}

double concentration_upper(double n, double m, double eps_f) {
    if (!(n > 0.0) || m < 0.0 || m > n) {
        throw std::domain_error("concentration_upper: need 0 <= m <= n, n > 0");
    }
    const double bound = (m + std::sqrt(0.5 * n * std::log(1.0 / eps_f))) / n;
    return std::min(bound, 1.0);
}

double solve_phase_error(double e_y_upper, double delta) {
    if (e_y_upper < 0.0 || delta < 0.0) {
        throw std::domain_error("solve_phase_error: negative input");
    }
    const double e_y = std::min(e_y_upper, 0.5);
    const double target = 1.0 - 2.0 * delta;
    if (target <= 0.0) {
        return 0.5; // vacuous bound
    }
    const auto g = [e_y](double x) {
        return std::sqrt(e_y * x) + std::sqrt((1.0 - e_y) * (1.0 - x));
    };
    if (g(0.5) >= target) {
        return 0.5;
    }
    // g is 1 at x = e_y and decreases towards x = 1/2; bisect for the root.
    double lo = e_y;
    double hi = 0.5;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) >= target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

KeyRateResult final_key_length(const KeyRateObservation& obs,
                               const SecurityParams& sec,
                               double pulse_rate_hz) {
    obs.validate();
    KeyRateResult res;
    res.pair = obs.pair;
    const double nx = static_cast<double>(obs.n_x);
    const double ny = static_cast<double>(obs.n_y);
    res.e_bx = static_cast<double>(obs.m_x) / nx;
    res.e_by = static_cast<double>(obs.m_y) / ny;

    const double gain = static_cast<double>(obs.n_tot) / obs.pulses;
    res.delta = delta_imbalance(obs.mu, gain);

    const double e_y_upper =
        concentration_upper(ny, static_cast<double>(obs.m_y), sec.eps_f);
    const double ep_star = solve_phase_error(e_y_upper, res.delta);
    // Second finite-sample step on the phase-error count in the X basis.
    const double mp_star = nx * ep_star;
    res.ep_bar = concentration_upper(nx, std::min(mp_star, nx), sec.eps_f);

    const double lambda_ec =
        obs.lambda_ec ? *obs.lambda_ec : nx * sec.f_ec * binary_entropy(res.e_bx);

    if (res.ep_bar >= 0.5) {
        res.entropy_dominated = true;
        res.l_bits = 0.0;
    } else {
        const double l = nx * (1.0 - binary_entropy(res.ep_bar)) - lambda_ec -
                         std::log2(2.0 / sec.eps_ec) -
                         std::log2(1.0 / (4.0 * sec.eps_pa * sec.eps_pa));
        res.l_bits = std::max(l, 0.0);
    }
    res.rate_bit_per_pulse = res.l_bits / obs.pulses;
    res.rate_kbps = res.rate_bit_per_pulse * pulse_rate_hz / 1e3;
    return res;
}

uint64_t key_budget(const std::map<std::string, double>& rates,
                    double pulse_rate_hz, double duration_s, int q,
                    uint64_t rounds, BudgetPolicy policy) {
    if (rates.empty()) {
        throw std::invalid_argument("key_budget: empty rate map");
    }
    for (const auto& [pair, rate] : rates) {
        if (!(rate > 0.0)) {
            throw std::invalid_argument("key_budget: non-positive rate for " +
                                        pair);
        }
    }
    const double per_round_bits = static_cast<double>(q) *
                                  static_cast<double>(rounds);
    double bits_per_pair;
    if (policy == BudgetPolicy::PerPairMin) {
        double min_rate = rates.begin()->second;
        for (const auto& [pair, rate] : rates) {
            min_rate = std::min(min_rate, rate);
        }
        bits_per_pair = min_rate * pulse_rate_hz * duration_s;
    } else {
        double total = 0.0;
        for (const auto& [pair, rate] : rates) {
            total += rate;
        }
        bits_per_pair = total * pulse_rate_hz * duration_s /
                        static_cast<double>(rates.size());
    }
    return static_cast<uint64_t>(std::floor(bits_per_pair / per_round_bits));
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        // trim whitespace
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos
                             ? std::string{}
                             : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

} // namespace

std::vector<KeyRateObservation> read_observations_csv(
    const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) {
        throw std::runtime_error("cannot open observations file: " +
                                 path.string());
    }
    std::string line;
    if (!std::getline(is, line)) {
        throw std::runtime_error("observations file is empty: " +
                                 path.string());
    }
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> expected = {
        "pair", "mu", "n_tot", "n_x", "m_x", "n_y", "m_y", "lambda_EC", "N"};
    if (header != expected) {
        throw std::runtime_error("observations file " + path.string() +
                                 ": unexpected header");
    }
    std::vector<KeyRateObservation> out;
    size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != expected.size()) {
            throw std::runtime_error(path.string() + ":" +
                                     std::to_string(line_no) +
                                     ": wrong field count");
        }
        try {
            KeyRateObservation obs;
            obs.pair = f[0];
            obs.mu = std::stod(f[1]);
            obs.n_tot = std::stoull(f[2]);
            obs.n_x = std::stoull(f[3]);
            obs.m_x = std::stoull(f[4]);
            obs.n_y = std::stoull(f[5]);
            obs.m_y = std::stoull(f[6]);
            if (!f[7].empty()) {
                obs.lambda_ec = std::stod(f[7]);
            }
            obs.pulses = std::stod(f[8]);
            obs.validate();
            out.push_back(std::move(obs));
        } catch (const std::exception& e) {
            throw std::runtime_error(path.string() + ":" +
                                     std::to_string(line_no) + ": " +
                                     e.what());
        }
    }
    if (out.empty()) {
        throw std::runtime_error("observations file has no data rows: " +
                                 path.string());
    }
    return out;
}

void write_rate_report_csv(const std::filesystem::path& path,
                           const std::vector<KeyRateResult>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open report file: " + path.string());
    }
    os << "pair,E_bx,E_by,Delta,Ep_bar,l_bits,rate_bit_per_pulse,rate_kbps\n";
    os.precision(10);
    for (const KeyRateResult& r : rows) {
        os << r.pair << ',' << r.e_bx << ',' << r.e_by << ',' << r.delta << ','
           << r.ep_bar << ',' << r.l_bits << ',' << r.rate_bit_per_pulse << ','
           << r.rate_kbps << '\n';
    }
}

} // namespace qkdfl
