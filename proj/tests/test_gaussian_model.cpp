#include "emvalue/bootstrap.hpp"
#include "emvalue/gaussian_model.hpp"
#include "emvalue/simulator.hpp"
#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>

using namespace emvalue;
using Catch::Approx;

namespace {

ModelParams make(std::int64_t n, std::int64_t m, double mu_x, double sigma2_x, double mu_eps = 0.0) {
    ModelParams p;
    p.n = n;
    p.m = m;
    p.mu_x = mu_x;
    p.sigma2_x = sigma2_x;
    p.mu_eps = mu_eps;
    return p;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

}  // namespace

TEST_CASE("model parameter validation", "[gaussian_model]") {
    CHECK_THROWS_AS(make(1, 1, 0, 1).validate(), std::domain_error);
    CHECK_THROWS_AS(make(10, 0, 0, 1).validate(), std::domain_error);
    CHECK_THROWS_AS(make(10, 11, 0, 1).validate(), std::domain_error);
    CHECK_THROWS_AS(make(10, 5, 0, 0).validate(), std::domain_error);
    CHECK_NOTHROW(make(10, 10, 0, 1).validate());
    CHECK_THROWS_AS((NoiseChange{-1.0, 0.0}.validate()), std::domain_error);
    CHECK_THROWS_AS(expected_mean_true_value(make(10, 2, 0, 1), -0.1), std::domain_error);
}

TEST_CASE("posterior mean", "[gaussian_model]") {
    const auto p = make(10, 1, 0.3, 2.0, 0.7);
    CHECK(posterior_mean(1.9, p, 0.0) == Approx(1.2).margin(1e-15));
    auto q = make(10, 1, 0.4, 2.0, 0.0);
    CHECK(posterior_mean(1.0, q, 2.0) == Approx(0.7).margin(1e-15));
    CHECK(posterior_mean(2.0, make(10, 1, 0.0, 1.0), 3.0) == Approx(0.5).margin(1e-15));
    // Weights sum to one: a constant y equal to mu_x + mu_eps maps to mu_x.
    CHECK(posterior_mean(0.3 + 0.7, p, 5.0) == Approx(0.3).margin(1e-15));
}

TEST_CASE("posterior variance", "[gaussian_model]") {
    CHECK(posterior_variance(make(10, 1, 0, 1.0), 0.0) == 0.0);
    CHECK(posterior_variance(make(10, 1, 0, 1.0), 1.0) == 0.5);
    CHECK(posterior_variance(make(10, 1, 0, 4.0), 1.0) == Approx(0.8).margin(1e-15));
    for (const double s2 : {0.01, 0.5, 3.0, 100.0}) {
        CHECK(posterior_variance(make(10, 1, 0, 2.0), s2) <= std::min(2.0, s2));
    }
}

TEST_CASE("expected selected true value", "[gaussian_model]") {
    const auto p = make(101, 1, 0.25, 2.0, 0.0);
    CHECK(expected_selected_true_value(RankedIndex(51, 101), p, 1.0) == 0.25);
    auto q = p;
    q.mu_eps = 100.0;
    for (std::int64_t r = 1; r <= 101; r += 10) {
        REQUIRE(bit_equal(expected_selected_true_value(RankedIndex(r, 101), p, 0.7),
                          expected_selected_true_value(RankedIndex(r, 101), q, 0.7)));
    }
}

TEST_CASE("shrinkage identity", "[gaussian_model]") {
    for (const double mu_eps : {0.0, -0.4, 2.0}) {
        const auto p = make(60, 5, 0.3, 1.7, mu_eps);
        for (const double s2 : {0.0, 0.2, 1.0, 9.0}) {
            for (std::int64_t r = 1; r <= 60; ++r) {
                const RankedIndex idx(r, 60);
                const double direct = expected_selected_true_value(idx, p, s2);
                const double via_posterior = posterior_mean(
                    blom_expectation(idx, p.mu_x + p.mu_eps, p.sigma2_x + s2, p.alpha), p, s2);
                REQUIRE(direct == Approx(via_posterior).epsilon(1e-13).margin(1e-13));
            }
        }
    }
}

TEST_CASE("expected selected true value of the top of 1000 matches brute force", "[gaussian_model][oracle]") {
    const auto sample = oracle::sample_selection(1000, 1, 1.0, 1.0, 100000, 31);
    const double mc = oracle::mean_of(sample.v);
    const double se = std::sqrt(oracle::variance_of(sample.v) / 100000.0);
    const double analytic = expected_selected_true_value(RankedIndex(1000, 1000), make(1000, 1, 0, 1), 1.0);
    INFO("analytic " << analytic << " mc " << mc << " se " << se);
    CHECK(std::abs(analytic - mc) <= 3.0 * se);
}

TEST_CASE("expected mean true value limits", "[gaussian_model]") {
    for (const std::int64_t n : {2, 10, 100, 6700}) {
        const auto p = make(n, n, 0.5, 0.04);
        CHECK(std::abs(expected_mean_true_value(p, 0.01) - 0.5) <= 1e-9 * 0.2);
    }
    const auto p = make(6700, 100, 0.1, 0.04);
    CHECK(std::abs(expected_mean_true_value(p, 1e12 * 0.04) - 0.1) <= 1e-5 * 0.2);
}

TEST_CASE("perfect measurement selects on the Blom expectations of X", "[gaussian_model]") {
    const auto p = make(200, 17, -0.3, 0.8);
    double sum = 0.0;
    for (std::int64_t r = 200 - 17 + 1; r <= 200; ++r) {
        sum += blom_expectation(RankedIndex(r, 200), p.mu_x, p.sigma2_x);
    }
    CHECK(expected_mean_true_value(p, 0.0) == Approx(sum / 17.0).epsilon(1e-13));
}

TEST_CASE("noise monotonicity and mu_eps invariance", "[gaussian_model]") {
    for (const std::int64_t m : {1, 5, 50}) {
        auto p = make(100, m, 0.2, 1.3);
        REQUIRE(top_blom_score_sum(p) > 0.0);
        double previous = 1e300;
        for (double s2 = 0.0; s2 <= 5.0; s2 += 0.25) {
            const double e = expected_mean_true_value(p, s2);
            REQUIRE(e < previous);
            previous = e;
        }
        CHECK(expected_value_gain(p, {1.0, 0.5}) > 0.0);
        auto q = p;
        q.mu_eps = -37.0;
        CHECK(bit_equal(expected_mean_true_value(p, 0.3), expected_mean_true_value(q, 0.3)));
        CHECK(bit_equal(expected_value_gain(p, {0.9, 0.1}), expected_value_gain(q, {0.9, 0.1})));
    }
}

TEST_CASE("expected value gain", "[gaussian_model]") {
    const auto p = make(6700, 100, 0.0, 0.006 * 0.006);
    CHECK(expected_value_gain(p, {0.5, 0.5}) == 0.0);
    CHECK(expected_value_gain(p, {0.0, 0.0}) == 0.0);
    for (const std::int64_t n : {2, 10, 184}) {
        CHECK(std::abs(expected_value_gain(make(n, n, 0.199, 0.01), {0.0025, 0.0001})) <= 1e-9 * 0.1);
    }
    CHECK(expected_value_gain(p, {0.01 * 0.01, 0.006 * 0.006}) ==
          Approx(expected_mean_true_value(p, 0.006 * 0.006) - expected_mean_true_value(p, 0.01 * 0.01))
              .epsilon(1e-12));
}

TEST_CASE("relative gain", "[gaussian_model]") {
    CHECK(relative_gain(1.0, {0.3, 0.3}) == 0.0);
    CHECK(relative_gain(1.0, {1.0, 0.0}) == Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
    CHECK(relative_gain(1.0, {1.0, 0.0}) == Approx(0.41421).margin(1e-5));
    CHECK_THROWS_AS(relative_gain(0.0, {1.0, 0.0}), std::domain_error);
    for (const std::int64_t n : {10, 100, 6700}) {
        for (const std::int64_t m : {1, 3, 10}) {
            const auto p = make(n, m, 0.0, 0.5);
            const NoiseChange c{0.8, 0.2};
            CHECK(relative_gain(p.sigma2_x, c) ==
                  Approx(expected_value_gain(p, c) / expected_mean_true_value(p, c.sigma2_before)).epsilon(1e-12));
        }
    }
}

TEST_CASE("selected true value variance", "[gaussian_model]") {
    const auto p = make(50, 1, 0.0, 1.7);
    for (std::int64_t r = 1; r <= 50; ++r) {
        const RankedIndex idx(r, 50);
        REQUIRE(selected_true_value_variance(idx, p, 0.0) == Approx(dj_variance(idx, 1.7)).epsilon(1e-14));
        REQUIRE(selected_true_value_variance(idx, p, 0.4) > 0.0);
    }
    CHECK(selected_true_value_variance(RankedIndex(50, 50), make(50, 1, 0, 1e-12), 1.0) < 1e-11);
}

TEST_CASE("selected true value covariance", "[gaussian_model]") {
    const auto p = make(50, 1, 0.0, 1.3);
    const double s2 = 0.6;
    const double total = p.sigma2_x + s2;
    const double factor = p.sigma2_x * p.sigma2_x / (total * total);
    for (std::int64_t r = 1; r < 50; ++r) {
        for (std::int64_t s = r + 1; s <= 50; ++s) {
            const RankedIndex ri(r, 50);
            const RankedIndex si(s, 50);
            const double c = selected_true_value_covariance(ri, si, p, s2);
            REQUIRE(c > 0.0);
            REQUIRE(c / dj_covariance(ri, si, total) == Approx(factor).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(selected_true_value_covariance(RankedIndex(5, 50), RankedIndex(5, 50), p, s2), std::domain_error);
    CHECK_THROWS_AS(selected_true_value_covariance(RankedIndex(6, 50), RankedIndex(5, 50), p, s2), std::domain_error);
}

TEST_CASE("selection moments at the top of 50 match brute force", "[gaussian_model][oracle]") {
    const std::size_t reps = 200000;
    const auto sample = oracle::sample_selection(50, 2, 1.0, 1.0, reps, 57);
    std::vector<double> top(reps);
    std::vector<double> second(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        top[i] = sample.x_at_rank[2 * i];
        second[i] = sample.x_at_rank[2 * i + 1];
    }
    const double mt = oracle::mean_of(top);
    const double ms = oracle::mean_of(second);
    double cov = 0.0;
    for (std::size_t i = 0; i < reps; ++i) {
        cov += (top[i] - mt) * (second[i] - ms);
    }
    cov /= static_cast<double>(reps - 1);
    const auto p = make(50, 2, 0.0, 1.0);
    CHECK(selected_true_value_variance(RankedIndex(50, 50), p, 1.0) == Approx(oracle::variance_of(top)).epsilon(0.15));
    CHECK(selected_true_value_covariance(RankedIndex(49, 50), RankedIndex(50, 50), p, 1.0) == Approx(cov).epsilon(0.20));
}

TEST_CASE("mean true value variance", "[gaussian_model]") {
    const auto one = make(40, 1, 0.0, 2.0);
    CHECK(mean_true_value_variance(one, 0.5) ==
          Approx(selected_true_value_variance(RankedIndex(40, 40), one, 0.5)).epsilon(1e-14));

    // Direct double sum as a cross-check of the factored evaluation.
    const auto p = make(30, 7, 0.0, 1.1);
    double direct = 0.0;
    for (std::int64_t r = 24; r <= 30; ++r) {
        direct += selected_true_value_variance(RankedIndex(r, 30), p, 0.3);
        for (std::int64_t s = r + 1; s <= 30; ++s) {
            direct += 2.0 * selected_true_value_covariance(RankedIndex(r, 30), RankedIndex(s, 30), p, 0.3);
        }
    }
    CHECK(mean_true_value_variance(p, 0.3) == Approx(direct / 49.0).epsilon(1e-12));

    double previous = 1e300;
    for (const std::int64_t m : {10, 20, 50, 100, 200, 500, 1000, 2000}) {
        const double v = mean_true_value_variance(make(6700, m, 0.0, 0.007 * 0.007), 0.01 * 0.01);
        REQUIRE(v > 0.0);
        REQUIRE(v < previous);
        previous = v;
    }
}

TEST_CASE("Var(V) for N = 100, M = 10 matches brute force within 15%", "[gaussian_model][oracle]") {
    const auto sample = oracle::sample_selection(100, 10, 1.0, 0.25, 200000, 73);
    CHECK(mean_true_value_variance(make(100, 10, 0.0, 1.0), 0.25) ==
          Approx(oracle::variance_of(sample.v)).epsilon(0.15));
}

TEST_CASE("variance bound and Sharpe ratio", "[gaussian_model]") {
    const auto p = make(300, 12, 0.1, 0.5);
    CHECK(value_gain_variance_bound(p, {0.2, 0.2}) == Approx(2.0 * mean_true_value_variance(p, 0.2)).epsilon(1e-15));
    CHECK(value_gain_variance_bound(p, {0.7, 0.0}) > 0.0);

    CHECK(sharpe_ratio(0.01, 1e-4, 0.0) == Approx(1.0).epsilon(1e-14));
    CHECK(sharpe_ratio(0.03, 2.0, 0.03) == 0.0);
    CHECK(sharpe_ratio(0.02, 4.0 * 3e-4, 0.0) == Approx(0.5 * sharpe_ratio(0.02, 3e-4, 0.0)).epsilon(1e-14));
    CHECK_THROWS_AS(sharpe_ratio(0.01, 0.0, 0.0), std::domain_error);
}

TEST_CASE("A/B test noise", "[gaussian_model]") {
    const auto noise = ab_test_noise({0.05, 5'000'000});
    CHECK(noise.absolute_var == Approx(1.9e-8).epsilon(1e-12));
    CHECK(std::sqrt(noise.relative_var) == Approx(0.00276).margin(5e-6));
    const auto doubled = ab_test_noise({0.05, 10'000'000});
    CHECK(doubled.absolute_var == Approx(0.5 * noise.absolute_var).epsilon(1e-14));
    CHECK(doubled.relative_var == Approx(0.5 * noise.relative_var).epsilon(1e-14));
    CHECK_THROWS_AS(ab_test_noise({0.0, 10}), std::domain_error);
    CHECK_THROWS_AS(ab_test_noise({1.0, 10}), std::domain_error);
    CHECK_THROWS_AS(ab_test_noise({0.5, 0}), std::domain_error);
}

TEST_CASE("analytic report", "[gaussian_model]") {
    const auto null_report = analytic_report(make(184, 10, 0.199, 0.01), {0.0025, 0.0025}, 0.0);
    CHECK(null_report.e_d == 0.0);
    CHECK(null_report.sharpe_lower_bound <= 0.0);
    CHECK_FALSE(null_report.relative_gain.has_value());

    const auto p = make(6700, 100, 0.0, 0.006 * 0.006);
    const NoiseChange c{0.01 * 0.01, 0.006 * 0.006};
    const auto a = analytic_report(p, c);
    const auto b = analytic_report(p, c);
    CHECK(a.e_d > 0.0);
    CHECK(a.var_v_before > 0.0);
    CHECK(a.var_v_after > 0.0);
    CHECK(a.var_d_upper_bound == a.var_v_before + a.var_v_after);
    REQUIRE(a.relative_gain.has_value());
    CHECK(*a.relative_gain == Approx(relative_gain(p.sigma2_x, c)).epsilon(1e-15));
    CHECK(a.sharpe_lower_bound == Approx(a.e_d / std::sqrt(a.var_d_upper_bound)).epsilon(1e-14));
    CHECK(bit_equal(a.e_d, b.e_d));
    CHECK(bit_equal(a.var_d_upper_bound, b.var_d_upper_bound));
    CHECK(bit_equal(a.sharpe_lower_bound, b.sharpe_lower_bound));
}

TEST_CASE("analytic E(V) lies in the simulator's bootstrap interval", "[gaussian_model][simulator]") {
    SimulationConfig config;
    config.params = make(6700, 100, 0.0, 0.006 * 0.006);
    config.change = {0.01 * 0.01, 0.006 * 0.006};
    config.cycles = 5000;
    config.seed = 606;
    const auto run = run_simulation(config);
    const auto ci = bootstrap_ci(run.v_before, Statistic::mean, 1000, 0.95, bootstrap_stream(config.seed, 0));
    const double analytic = expected_mean_true_value(config.params, config.change.sigma2_before);
    INFO("analytic " << analytic << " in [" << ci.lower << ", " << ci.upper << "]");
    CHECK(contains(ci, analytic));
}

TEST_CASE("analytic E(D) for the marketing setting lies in the simulator's bootstrap interval",
          "[gaussian_model][simulator]") {
    SimulationConfig config;
    config.params = make(184, 10, 0.199, 0.01);
    config.change = {0.0025, 0.008 * 0.008};
    config.cycles = 5000;
    config.seed = 184;
    const auto run = run_simulation(config);
    const auto ci = bootstrap_ci(run.d, Statistic::mean, 1000, 0.95, bootstrap_stream(config.seed, 4));
    const double analytic = expected_value_gain(config.params, config.change);
    INFO("analytic " << analytic << " in [" << ci.lower << ", " << ci.upper << "]");
    CHECK(contains(ci, analytic));
}
