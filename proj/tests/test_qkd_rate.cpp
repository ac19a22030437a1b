// Copyright 2026 The qkdfl Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "qkdfl/qkd_rate.hpp"

using namespace qkdfl;

namespace {
const std::filesystem::path kObsCsv =
    std::filesystem::path(QKDFL_DATA_DIR) / "mdi_observations.csv";
}

TEST_CASE("binary entropy basics") {
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.0077) ==
          doctest::Approx(0.06512700188196684).epsilon(1e-12));
    CHECK_THROWS_AS(binary_entropy(-0.1), std::domain_error);
    CHECK_THROWS_AS(binary_entropy(1.1), std::domain_error);
}

TEST_CASE("basis fidelity matches the closed form e^{-2mu}(cos+sin)^2") {
    for (double mu = 1e-4; mu <= 0.1; mu *= 1.37) {
        const double closed =
            std::exp(-2.0 * mu) * std::pow(std::cos(mu) + std::sin(mu), 2.0);
        CHECK(basis_fidelity(mu) == doctest::Approx(closed).epsilon(1e-12));
    }
    CHECK(basis_fidelity(1e-12) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(basis_fidelity(0.017) ==
          doctest::Approx(0.9994286044734071).epsilon(1e-12));
    CHECK(basis_fidelity(0.0074) ==
          doctest::Approx(0.9998910222683162).epsilon(1e-12));
}

TEST_CASE("delta imbalance scales as 1/Q") {
    const double q = 209641454.0 / 2e10;
    CHECK(delta_imbalance(0.017, q) ==
          doctest::Approx(0.027255846383936574).epsilon(1e-10));
    CHECK(delta_imbalance(0.017, 2.0 * q) ==
          doctest::Approx(0.5 * delta_imbalance(0.017, q)).epsilon(1e-12));
    CHECK_THROWS_AS(delta_imbalance(0.017, 0.0), std::domain_error);
}

TEST_CASE("concentration correction") {
    CHECK(concentration_upper(2095785, 8263, 1e-10) ==
          doctest::Approx(0.00628646965784193).epsilon(1e-10));
    CHECK(concentration_upper(1000, 100, 1.0) ==
          doctest::Approx(0.1).epsilon(1e-15)); // ln 1 = 0
    CHECK(concentration_upper(100, 100, 1e-10) == 1.0); // capped
}

TEST_CASE("phase-error bound: special cases against the closed form") {
    // Delta = 0 forces x = e_y (the concave maximum is at x = e_y).
    CHECK(solve_phase_error(0.01, 0.0) ==
          doctest::Approx(0.01).epsilon(1e-8));
    // e_y = 0: sqrt(1 - x) = 1 - 2 Delta => x = 1 - (1 - 2 Delta)^2,
    // clamped to the search window [e_y, 1/2].
    for (const double delta : {0.01, 0.05, 0.2}) {
        const double expect =
            std::min(1.0 - std::pow(1.0 - 2.0 * delta, 2.0), 0.5);
        CHECK(solve_phase_error(0.0, delta) ==
              doctest::Approx(expect).epsilon(1e-9));
    }
    // general case: quadratic in z = sqrt((1-e)(1-x)) as an oracle
    const double e_y = 0.006286;
    const double delta = 0.0272;
    const double c = 1.0 - 2.0 * delta;
    const double z = c * (1.0 - e_y) -
                     std::sqrt((1.0 - e_y) * e_y * (1.0 - c * c));
    const double oracle = 1.0 - z * z / (1.0 - e_y);
    CHECK(solve_phase_error(e_y, delta) ==
          doctest::Approx(oracle).epsilon(1e-9));
    // vacuous bound
    CHECK(solve_phase_error(0.01, 0.5) == 0.5);
    CHECK(solve_phase_error(0.3, 0.49) == 0.5);
}

TEST_CASE("solved bound satisfies the inequality with near equality") {
    for (const double e_y : {0.001, 0.01, 0.02}) {
        for (const double delta : {0.01, 0.03, 0.1}) {
            const double x = solve_phase_error(e_y, delta);
            if (x < 0.5) {
                const double g = std::sqrt(e_y * x) +
                                 std::sqrt((1.0 - e_y) * (1.0 - x));
                CHECK(g == doctest::Approx(1.0 - 2.0 * delta).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("observation fixture loads and reproduces printed error rates") {
    const auto obs = read_observations_csv(kObsCsv);
    REQUIRE(obs.size() == 9);
    // E_b^x of the 4-client AB row prints as 0.77%
    const auto& ab4 = obs[3];
    CHECK(ab4.pair == "4-AB");
    CHECK(100.0 * static_cast<double>(ab4.m_x) / static_cast<double>(ab4.n_x) ==
          doctest::Approx(0.77).epsilon(5e-3));
}

TEST_CASE("final key length reproduces the published rates within 20%") {
    const auto obs = read_observations_csv(kObsCsv);
    const SecurityParams sec;
    const std::map<std::string, double> published = {
        {"3-AB", 2.30e-3}, {"3-AC", 3.76e-4}, {"3-AD", 4.59e-4},
        {"4-AB", 2.40e-3}, {"4-AC", 3.56e-4}, {"4-AD", 4.30e-4},
        {"4-BC", 4.46e-4}, {"4-BD", 3.66e-4}, {"4-CD", 3.28e-4}};
    for (const auto& o : obs) {
        const KeyRateResult res = final_key_length(o, sec);
        const double ref = published.at(o.pair);
        CHECK(std::abs(res.rate_bit_per_pulse / ref - 1.0) < 0.20);
    }
}

TEST_CASE("key length is monotone in the counts") {
    const auto obs = read_observations_csv(kObsCsv);
    SecurityParams sec;
    sec.f_ec = 1.16;
    KeyRateObservation base = obs[3];
    base.lambda_ec.reset(); // recompute from f*H so m_x matters
    const double l0 = final_key_length(base, sec).l_bits;

    KeyRateObservation more_bit_errors = base;
    more_bit_errors.m_x += 100000;
    CHECK(final_key_length(more_bit_errors, sec).l_bits < l0);

    KeyRateObservation more_phase_errors = base;
    more_phase_errors.m_y += 1000;
    CHECK(final_key_length(more_phase_errors, sec).l_bits < l0);

    KeyRateObservation more_x_counts = base;
    more_x_counts.n_x += 1000000;
    more_x_counts.n_tot += 1000000;
    CHECK(final_key_length(more_x_counts, sec).l_bits > l0);
}

TEST_CASE("degenerate observation yields zero key") {
    KeyRateObservation obs;
    obs.pair = "toy";
    obs.mu = 0.02;
    obs.n_tot = 1000;
    obs.n_x = 500;
    obs.m_x = 200;
    obs.n_y = 400;
    obs.m_y = 190; // pushes the corrected rate to ~0.5
    obs.pulses = 1e6;
    obs.lambda_ec = 0.0;
    const KeyRateResult res = final_key_length(obs, SecurityParams{});
    CHECK(res.l_bits == 0.0);
}

TEST_CASE("key budget policies") {
    const std::map<std::string, double> rates3 = {
        {"AB", 2.30e-3}, {"AC", 3.76e-4}, {"AD", 4.59e-4}};
    CHECK(key_budget(rates3, 1e8, 200.0, 32, 200,
                     BudgetPolicy::PerPairMin) == 1175);
    CHECK(key_budget(rates3, 1e8, 200.0, 32, 200,
                     BudgetPolicy::TotalPool) == 3265);
    const std::map<std::string, double> ad_only = {{"AD", 4.59e-4}};
    CHECK(key_budget(ad_only, 1e8, 200.0, 32, 200,
                     BudgetPolicy::PerPairMin) == 1434);
    // doubling duration doubles the budget (integer floor of a linear map)
    CHECK(key_budget(ad_only, 1e8, 400.0, 32, 200,
                     BudgetPolicy::PerPairMin) == 2868);
    // one pair, rate*pulses = q*T -> exactly one parameter
    const std::map<std::string, double> unit = {{"p", 1.0}};
    CHECK(key_budget(unit, 64.0, 1.0, 8, 8, BudgetPolicy::PerPairMin) == 1);
    CHECK_THROWS_AS(key_budget({}, 1e8, 200.0, 32, 200,
                               BudgetPolicy::PerPairMin),
                    std::invalid_argument);
}

TEST_CASE("malformed CSV rows carry a line number") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto bad = dir / "qkdfl_bad_obs.csv";
    {
        std::ofstream os(bad);
        os << "pair,mu,n_tot,n_x,m_x,n_y,m_y,lambda_EC,N\n";
        os << "AB,0.017,100,50,5,40,4,,1e6\n";
        os << "AC,not_a_number,100,50,5,40,4,,1e6\n";
    }
    try {
        read_observations_csv(bad);
        FAIL("expected parse failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    std::filesystem::remove(bad);
}
