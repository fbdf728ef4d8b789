#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "mindprint/agent.hpp"
#include "mindprint/calibration.hpp"
#include "mindprint/irt.hpp"
#include "mindprint/rng.hpp"
#include "mindprint/sdt.hpp"

using namespace mindprint;

TEST_CASE("irt_prob closed-form values") {
    CHECK(irt_prob(0.7, 2.3, 0.7) == Catch::Approx(0.5));
    CHECK(irt_prob(std::log(3.0), 1.0, 0.0) == Catch::Approx(0.75));
    // 1/(1 + e^-2), frozen from a high-precision oracle
    CHECK(irt_prob(1.0, 2.0, 0.0) == Catch::Approx(0.8807970779778824).epsilon(1e-12));
    CHECK_THROWS_AS(irt_prob(0.0, 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(irt_prob(0.0, -1.0, 0.0), std::domain_error);
}

TEST_CASE("irt_prob is strictly increasing in theta") {
    Rng rng(21);
    for (int i = 0; i < 300; ++i) {
        const double a = 0.05 + 4.0 * rng.uniform();
        const double b = -4.0 + 8.0 * rng.uniform();
        const double t1 = -6.0 + 12.0 * rng.uniform();
        const double t2 = t1 + 1e-4 + 3.0 * rng.uniform();
        CHECK(irt_prob(t2, a, b) > irt_prob(t1, a, b));
    }
}

TEST_CASE("fit_theta: single correct item hits the +8 boundary unconverged") {
    auto fit = fit_theta({{1.0, 0.0, true}});
    CHECK(fit.theta_hat == Catch::Approx(8.0));
    CHECK_FALSE(fit.converged);
    CHECK(std::isfinite(fit.std_error));

    auto fit_lo = fit_theta({{1.0, 0.0, false}});
    CHECK(fit_lo.theta_hat == Catch::Approx(-8.0));
    CHECK_FALSE(fit_lo.converged);
}

TEST_CASE("fit_theta rejects empty input") {
    CHECK_THROWS_AS(fit_theta({}), InsufficientDataError);
}

TEST_CASE("fit_theta score is ~0 at the optimum and matches finite differences") {
    Rng rng(5);
    std::vector<IrtOutcome> items;
    for (int j = 0; j < 150; ++j) {
        const double a = 0.8 + 1.2 * rng.uniform();
        const double b = -2.0 + 4.0 * rng.uniform();
        items.push_back({a, b, rng.uniform() < irt_prob(0.8, a, b)});
    }
    auto fit = fit_theta(items);
    REQUIRE(fit.converged);
    CHECK(std::fabs(irt_score(items, fit.theta_hat)) < 1e-6);

    // Central finite differences of the log-likelihood at 10 random points.
    const double h = 1e-5;
    for (int k = 0; k < 10; ++k) {
        const double theta = -3.0 + 6.0 * rng.uniform();
        const double numeric =
            (irt_log_likelihood(items, theta + h) - irt_log_likelihood(items, theta - h)) / (2 * h);
        CHECK(std::fabs(numeric - irt_score(items, theta)) < 1e-4);
    }
}

TEST_CASE("fit_theta recovers the generating ability at 200 items") {
    // theta_true = 1.0; recovery within +/-0.25 in >= 90% of 100 seeded runs.
    std::size_t hits = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        Rng rng(seed * 7919);
        std::vector<IrtOutcome> items;
        for (int j = 0; j < 200; ++j) {
            const double a = 0.8 + 1.2 * rng.uniform();
            const double b = -2.0 + 4.0 * rng.uniform();
            items.push_back({a, b, rng.uniform() < irt_prob(1.0, a, b)});
        }
        auto fit = fit_theta(items);
        if (fit.converged && std::fabs(fit.theta_hat - 1.0) <= 0.25) ++hits;
    }
    CHECK(hits >= 90);
}

TEST_CASE("fit_theta is centered on a symmetric item set") {
    // Responses generated at theta_true = 0 on b mirrored around zero:
    // the mean estimate over 200 seeds stays within 0.05 of zero.
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Rng rng(seed * 104729);
        std::vector<IrtOutcome> items;
        for (int j = 0; j < 60; ++j) {
            const double b = 0.25 * (j % 8) - 0.875;  // mirrored +/- grid
            items.push_back({1.0, b, rng.uniform() < irt_prob(0.0, 1.0, b)});
        }
        auto fit = fit_theta(items);
        sum += fit.converged ? fit.theta_hat : 0.0;
    }
    CHECK(std::fabs(sum / 200.0) < 0.05);
}

TEST_CASE("calibrate_items recovers known item parameters") {
    // Target item (a=1.5, b=-0.5) among 40 items, 200 standard-normal agents.
    // Frozen seed verified against the generate-and-refit oracle; tolerance
    // +/-0.3 on a and +/-0.2 on b.
    Rng rng(2024);
    const std::size_t n_agents = 200, n_items = 40;
    std::vector<double> ta(n_items), tb(n_items);
    for (std::size_t j = 0; j < n_items; ++j) {
        ta[j] = 0.7 + 1.3 * rng.uniform();
        tb[j] = -1.5 + 3.0 * rng.uniform();
    }
    ta[0] = 1.5;
    tb[0] = -0.5;
    std::vector<std::vector<bool>> responses(n_agents, std::vector<bool>(n_items));
    for (std::size_t i = 0; i < n_agents; ++i) {
        const double theta = rng.normal();
        for (std::size_t j = 0; j < n_items; ++j) {
            responses[i][j] = rng.uniform() < irt_prob(theta, ta[j], tb[j]);
        }
    }
    auto run = calibrate_items(responses);
    REQUIRE(run.items[0].a_hat.has_value());
    CHECK(std::fabs(*run.items[0].a_hat - 1.5) <= 0.3);
    CHECK(std::fabs(*run.items[0].b_hat + 0.5) <= 0.2);
}

TEST_CASE("calibrate_items flags constant-outcome items") {
    Rng rng(11);
    std::vector<std::vector<bool>> responses(30, std::vector<bool>(12));
    for (auto& row : responses) {
        for (std::size_t j = 0; j < 12; ++j) row[j] = rng.uniform() < 0.6;
        row[3] = true;  // degenerate column
    }
    auto run = calibrate_items(responses);
    CHECK(run.items[3].degenerate);
    CHECK_FALSE(run.items[3].a_hat.has_value());
    CHECK(run.items[4].a_hat.has_value());
}

TEST_CASE("calibrate_items gives identical estimates to duplicated item columns") {
    Rng rng(13);
    const std::size_t n_agents = 60, n_items = 12;
    std::vector<std::vector<bool>> responses(n_agents, std::vector<bool>(n_items));
    for (std::size_t i = 0; i < n_agents; ++i) {
        const double theta = rng.normal();
        for (std::size_t j = 0; j + 1 < n_items; ++j) {
            responses[i][j] = rng.uniform() < irt_prob(theta, 1.0 + 0.05 * double(j), 0.1 * double(j) - 0.5);
        }
        responses[i][n_items - 1] = responses[i][0];  // exact duplicate of column 0
    }
    auto run = calibrate_items(responses);
    REQUIRE(run.items[0].a_hat.has_value());
    REQUIRE(run.items[n_items - 1].a_hat.has_value());
    CHECK(*run.items[0].a_hat == Catch::Approx(*run.items[n_items - 1].a_hat).margin(1e-6));
    CHECK(*run.items[0].b_hat == Catch::Approx(*run.items[n_items - 1].b_hat).margin(1e-6));
}

TEST_CASE("calibrate_items enforces its desk-scale floor") {
    std::vector<std::vector<bool>> few_agents(10, std::vector<bool>(12, true));
    CHECK_THROWS_AS(calibrate_items(few_agents), InsufficientDataError);
    std::vector<std::vector<bool>> few_items(25, std::vector<bool>(5, true));
    CHECK_THROWS_AS(calibrate_items(few_items), InsufficientDataError);
}

TEST_CASE("fit_sdt: symmetric chance performance") {
    auto fit = fit_sdt(50, 50, 50, 50);
    CHECK(fit.d_prime == Catch::Approx(0.0).margin(1e-12));
    CHECK(fit.criterion == Catch::Approx(0.0).margin(1e-12));
    CHECK(fit.corrected);
}

TEST_CASE("fit_sdt: H=0.84, F=0.16 at n=1000 per side") {
    // Corrected rates 840.5/1001 and 160.5/1001; d' frozen from the
    // high-precision inverse-normal oracle.
    auto fit = fit_sdt(840, 160, 160, 840);
    CHECK(fit.d_prime == Catch::Approx(1.9861257251366942).epsilon(1e-10));
    CHECK(fit.criterion == Catch::Approx(0.0).margin(1e-12));
    CHECK(fit.hit_rate == Catch::Approx(840.5 / 1001.0));
}

TEST_CASE("fit_sdt: perfect 10/10 table stays finite through the correction") {
    auto fit = fit_sdt(10, 0, 0, 10);
    CHECK(fit.hit_rate == Catch::Approx(10.5 / 11.0));
    CHECK(fit.fa_rate == Catch::Approx(0.5 / 11.0));
    CHECK(fit.d_prime == Catch::Approx(3.3812432591697963).epsilon(1e-10));
    CHECK(fit.criterion == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("fit_sdt swap identity: relabeling assert/abstain negates d' and c") {
    // Exchanging hits<->misses and false alarms<->correct rejections maps the
    // corrected rates to their complements, so both d' and c negate exactly.
    // (Exchanging the signal and noise rows instead negates d' but preserves
    // c; that variant is asserted below.)
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto h = rng.uniform_int(0, 40);
        const auto m = rng.uniform_int(0, 40);
        const auto f = rng.uniform_int(0, 40);
        const auto c = rng.uniform_int(0, 40);
        if (h + m == 0 || f + c == 0) continue;
        auto fit = fit_sdt(h, m, f, c);
        auto relabeled = fit_sdt(m, h, c, f);
        CHECK(relabeled.d_prime == Catch::Approx(-fit.d_prime).margin(1e-12));
        CHECK(relabeled.criterion == Catch::Approx(-fit.criterion).margin(1e-12));

        auto rows_swapped = fit_sdt(f, c, h, m);
        CHECK(rows_swapped.d_prime == Catch::Approx(-fit.d_prime).margin(1e-12));
        CHECK(rows_swapped.criterion == Catch::Approx(fit.criterion).margin(1e-12));
    }
}

TEST_CASE("fit_sdt requires trials on both sides") {
    CHECK_THROWS_AS(fit_sdt(0, 0, 5, 5), InsufficientDataError);
    CHECK_THROWS_AS(fit_sdt(5, 5, 0, 0), InsufficientDataError);
}

TEST_CASE("calibration_metrics: perfect forecasts") {
    std::vector<ConfidencePair> pairs(50, {1.0, true});
    auto fit = calibration_metrics(pairs);
    CHECK(fit.brier == 0.0);
    CHECK(fit.ece == 0.0);
    CHECK(fit.n == 50);
}

TEST_CASE("calibration_metrics: constant 0.7 forecast at rate 0.7") {
    // Analytic expectation: brier -> 0.7*0.09 + 0.3*0.49 = 0.21, ece -> 0.
    Rng rng(17);
    std::vector<ConfidencePair> pairs;
    for (int i = 0; i < 20000; ++i) pairs.push_back({0.7, rng.uniform() < 0.7});
    auto fit = calibration_metrics(pairs);
    CHECK(fit.brier == Catch::Approx(0.21).margin(0.01));
    CHECK(fit.ece < 0.02);
}

TEST_CASE("calibration_metrics bin partition is exhaustive and exclusive") {
    Rng rng(23);
    std::vector<ConfidencePair> pairs;
    for (int i = 0; i < 5000; ++i) pairs.push_back({rng.uniform(), rng.uniform() < 0.5});
    pairs.push_back({1.0, true});
    pairs.push_back({0.0, false});
    auto fit = calibration_metrics(pairs);
    std::size_t total = 0;
    for (const auto& bin : fit.bins) total += bin.count;
    CHECK(total == fit.n);
    CHECK(fit.bins.back().count >= 1);  // confidence 1.0 lands in the top bin
    CHECK(fit.brier >= 0.0);
    CHECK(fit.brier <= 1.0);
    CHECK(fit.ece >= 0.0);
    CHECK(fit.ece <= 1.0);
}

TEST_CASE("miscalibrated agents show higher ece than calibrated ones") {
    // gamma = 2 vs gamma = 1 at n = 1000 pairs; the warp is the agent's own
    // confidence map, correctness stays Bernoulli(p).
    std::size_t worse = 0;
    const int trials = 60;
    for (int t = 0; t < trials; ++t) {
        Rng rng(500 + t);
        std::vector<ConfidencePair> honest, warped;
        for (int i = 0; i < 1000; ++i) {
            const double p = irt_prob(0.8, 1.0, -2.0 + 4.0 * (i % 11) / 10.0);
            const bool correct = rng.uniform() < p;
            honest.push_back({confidence_warp(p, 1.0), correct});
            warped.push_back({confidence_warp(p, 2.0), correct});
        }
        worse += calibration_metrics(warped).ece > calibration_metrics(honest).ece ? 1 : 0;
    }
    CHECK(worse >= static_cast<std::size_t>(0.95 * trials));
}
