// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qkdfl {

/**
 * @brief Per-pair experimental counts feeding the finite-key analysis.
 *
 * n_tot is the number of effective detection events out of N pulses; n_x/m_x
 * and n_y/m_y are counts/errors in the two bases; lambda_ec is the disclosed
 * error-correction leakage in bits (if absent it is reconstructed as
 * n_x * f * H(m_x/n_x)).
 */
struct KeyRateObservation {
    std::string pair;
    double mu = 0.0;
    uint64_t n_tot = 0;
    uint64_t n_x = 0;
    uint64_t m_x = 0;
    uint64_t n_y = 0;
    uint64_t m_y = 0;
    double pulses = 0.0; // N, total pulses sent
    std::optional<double> lambda_ec;

    void validate() const;
};

struct SecurityParams {
    double eps_ec = 1e-10;
    double eps_pa = 1e-10;
    double eps_f = 1e-10;
    double f_ec = 1.16; // error-correction efficiency when lambda_ec absent
};

/// Binary Shannon entropy with H(0) = H(1) = 0.
double binary_entropy(double x);

/// |<Psi_X|Psi_Y>|^2 for the four-phase coherent-state bases at intensity mu,
/// evaluated term by term from the coherent-state overlaps.
double basis_fidelity(double mu);

/// Basis-imbalance parameter Delta = (1 - fidelity) / (2 Q), Q = total gain.
double delta_imbalance(double mu, double total_gain);

/// Finite-sample upper bound on a rate: (m + sqrt(n ln(1/eps_f) / 2)) / n,
/// capped at 1.
double concentration_upper(double n, double m, double eps_f);

/**
 * Largest x in [e_y, 1/2] with sqrt(e_y x) + sqrt((1-e_y)(1-x)) >= 1 - 2*Delta,
 * by bisection to 1e-12. Returns 1/2 when the constraint is vacuous.
 */
double solve_phase_error(double e_y_upper, double delta);

struct KeyRateResult {
    std::string pair;
    double e_bx = 0.0;
    double e_by = 0.0;
    double delta = 0.0;
    double ep_bar = 0.0;   // final phase-error upper bound
    double l_bits = 0.0;   // secure key length
    double rate_bit_per_pulse = 0.0;
    double rate_kbps = 0.0; // at the given pulse rate
    bool entropy_dominated = false; // Ep_bar >= 1/2 forced l = 0
};

/**
 * Full finite-key pipeline: gain -> Delta -> concentration-corrected Y-basis
 * error -> phase-error bound -> second concentration step -> key length
 *   l = n_x (1 - H(Ep_bar)) - lambda_EC - log2(2/eps_EC) - log2(1/(4 eps_PA^2))
 * clamped at zero.
 */
KeyRateResult final_key_length(const KeyRateObservation& obs,
                               const SecurityParams& sec,
                               double pulse_rate_hz = 1e8);

enum class BudgetPolicy { PerPairMin, TotalPool };

/**
 * Largest model size M trainable for T rounds at bit width q from the given
 * per-pair key rates (bit/pulse) accumulated over `duration_s` seconds at
 * `pulse_rate_hz`. PerPairMin budgets every pair at the slowest pair's rate;
 * TotalPool divides the pooled key volume evenly across pairs.
 */
uint64_t key_budget(const std::map<std::string, double>& rates,
                    double pulse_rate_hz, double duration_s, int q,
                    uint64_t rounds, BudgetPolicy policy);

/// CSV with header pair,mu,n_tot,n_x,m_x,n_y,m_y,lambda_EC,N. lambda_EC may
/// be empty. Throws with a line number on malformed rows.
std::vector<KeyRateObservation> read_observations_csv(
    const std::filesystem::path& path);

void write_rate_report_csv(const std::filesystem::path& path,
                           const std::vector<KeyRateResult>& rows);

} // namespace qkdfl
