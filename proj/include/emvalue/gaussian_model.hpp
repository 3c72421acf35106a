#pragma once

// Analytic valuation of noise reduction under the independent normal value /
// normal noise model. X_n ~ N(mu_x, sigma2_x) are the true values, Y_n = X_n +
// eps_n with eps_n ~ N(mu_eps, sigma2_eps) are the estimates, the M largest
// estimates are selected and V is the mean true value of the selection.

#include "emvalue/order_stats.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace emvalue {

struct ModelParams {
    std::int64_t n = 2;      ///< candidate propositions
    std::int64_t m = 1;      ///< selection capacity
    double mu_x = 0.0;       ///< mean true value
    double sigma2_x = 1.0;   ///< true-value variance
    double mu_eps = 0.0;     ///< systematic estimation bias
    BlomConstant alpha{};

    void validate() const {
        if (n < 2) {
            throw std::domain_error("model: N must be at least 2");
        }
        if (m < 1 || m > n) {
            throw std::domain_error("model: M must lie in [1, N]");
        }
        if (!(sigma2_x > 0.0) || !std::isfinite(sigma2_x)) {
            throw std::domain_error("model: sigma2_x must be positive and finite");
        }
        if (!std::isfinite(mu_x) || !std::isfinite(mu_eps)) {
            throw std::domain_error("model: means must be finite");
        }
    }
};

/// Estimation-noise variance before and after acquiring a capability.
struct NoiseChange {
    double sigma2_before = 0.0;
    double sigma2_after = 0.0;

    void validate() const {
        if (!(sigma2_before >= 0.0) || !(sigma2_after >= 0.0) || !std::isfinite(sigma2_before) ||
            !std::isfinite(sigma2_after)) {
            throw std::domain_error("noise change: variances must be finite and >= 0");
        }
    }
};

struct AnalyticReport {
    double e_v_before = 0.0;
    double e_v_after = 0.0;
    double e_d = 0.0;
    double var_v_before = 0.0;
    double var_v_after = 0.0;
    /// Var(V|before) + Var(V|after). The exact Var(D) is smaller because the
    /// two selections share the same true values.
    double var_d_upper_bound = 0.0;
    /// Only defined for mu_x == 0.
    std::optional<double> relative_gain;
    /// Sharpe ratio evaluated with the variance bound, hence conservative.
    double sharpe_lower_bound = 0.0;
};

/// Conversion-rate A/B test with n samples in each of two variants.
struct AbTestDesign {
    double p = 0.05;
    std::int64_t n = 1;
};

struct AbTestNoise {
    double absolute_var = 0.0;
    double relative_var = 0.0;
};

namespace detail {

inline void check_noise(double sigma2_eps) {
    if (!(sigma2_eps >= 0.0) || !std::isfinite(sigma2_eps)) {
        throw std::domain_error("noise variance must be finite and >= 0");
    }
}

/// Selected ranks are N-M+1 .. N.
inline std::int64_t first_selected_rank(const ModelParams& params) { return params.n - params.m + 1; }

}  // namespace detail

inline double posterior_mean(double y, const ModelParams& params, double sigma2_eps) {
    detail::check_noise(sigma2_eps);
    const double total = params.sigma2_x + sigma2_eps;
    return params.sigma2_x / total * (y - params.mu_eps) + sigma2_eps / total * params.mu_x;
}

inline double posterior_variance(const ModelParams& params, double sigma2_eps) {
    detail::check_noise(sigma2_eps);
    return sigma2_eps * params.sigma2_x / (params.sigma2_x + sigma2_eps);
}

/// Sum of the Blom scores of the top M ranks.
inline double top_blom_score_sum(const ModelParams& params) {
    params.validate();
    double sum = 0.0;
    for (std::int64_t r = detail::first_selected_rank(params); r <= params.n; ++r) {
        sum += blom_score(RankedIndex(r, params.n), params.alpha);
    }
    return sum;
}

/// E(X at the r-th ranked estimate). Does not depend on mu_eps.
inline double expected_selected_true_value(RankedIndex r, const ModelParams& params, double sigma2_eps) {
    detail::check_noise(sigma2_eps);
    const double shrink = params.sigma2_x / std::sqrt(params.sigma2_x + sigma2_eps);
    return params.mu_x + shrink * blom_score(r, params.alpha);
}

/// E(V) at noise variance sigma2_eps.
inline double expected_mean_true_value(const ModelParams& params, double sigma2_eps) {
    detail::check_noise(sigma2_eps);
    const double shrink = params.sigma2_x / std::sqrt(params.sigma2_x + sigma2_eps);
    return params.mu_x + shrink * top_blom_score_sum(params) / static_cast<double>(params.m);
}

/// E(D) = E(V | sigma2_after) - E(V | sigma2_before).
inline double expected_value_gain(const ModelParams& params, const NoiseChange& change) {
    change.validate();
    if (change.sigma2_before == change.sigma2_after) {
        return 0.0;
    }
    const double shrink_after = params.sigma2_x / std::sqrt(params.sigma2_x + change.sigma2_after);
    const double shrink_before = params.sigma2_x / std::sqrt(params.sigma2_x + change.sigma2_before);
    return (shrink_after - shrink_before) * top_blom_score_sum(params) / static_cast<double>(params.m);
}

/// E(D) / E(V | before) under mu_x = 0; independent of N, M and mu_eps.
inline double relative_gain(double sigma2_x, const NoiseChange& change) {
    change.validate();
    if (!(sigma2_x > 0.0)) {
        throw std::domain_error("relative_gain: sigma2_x must be positive");
    }
    return std::sqrt(sigma2_x + change.sigma2_before) / std::sqrt(sigma2_x + change.sigma2_after) - 1.0;
}

/// Var(X at the r-th ranked estimate), by the law of total variance.
inline double selected_true_value_variance(RankedIndex r, const ModelParams& params, double sigma2_eps) {
    detail::check_noise(sigma2_eps);
    const double total = params.sigma2_x + sigma2_eps;
    return posterior_variance(params, sigma2_eps) +
           params.sigma2_x * params.sigma2_x / total * dj_variance_kernel(r);
}

inline double selected_true_value_covariance(RankedIndex r, RankedIndex s, const ModelParams& params,
                                             double sigma2_eps) {
    detail::check_noise(sigma2_eps);
    if (r.rank() >= s.rank()) {
        throw std::domain_error("selected_true_value_covariance: ranks must satisfy r < s");
    }
    const double total = params.sigma2_x + sigma2_eps;
    return params.sigma2_x * params.sigma2_x / total * dj_covariance_kernel(r, s);
}

/// Var(V) at noise variance sigma2_eps: variances plus twice the covariances
/// over the top-M ranks, divided by M^2.
inline double mean_true_value_variance(const ModelParams& params, double sigma2_eps) {
    params.validate();
    detail::check_noise(sigma2_eps);
    const double total = params.sigma2_x + sigma2_eps;
    const double signal = params.sigma2_x * params.sigma2_x / total;
    const std::int64_t first = detail::first_selected_rank(params);
    const auto m = static_cast<std::size_t>(params.m);

    // Per-rank factors shared by every kernel evaluation.
    std::vector<double> inv_density(m);
    for (std::size_t i = 0; i < m; ++i) {
        inv_density[i] = 1.0 / detail::density_at_plotting_position(
                                   RankedIndex(first + static_cast<std::int64_t>(i), params.n));
    }
    const double noise_part = posterior_variance(params, sigma2_eps);

    double sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const std::int64_t r = first + static_cast<std::int64_t>(i);
        sum += noise_part + signal * detail::rank_weight(r, r, params.n) * inv_density[i] * inv_density[i];
        double cross = 0.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const std::int64_t s = first + static_cast<std::int64_t>(j);
            cross += detail::rank_weight(r, s, params.n) * inv_density[j];
        }
        sum += 2.0 * signal * inv_density[i] * cross;
    }
    const auto md = static_cast<double>(params.m);
    return sum / (md * md);
}

inline double value_gain_variance_bound(const ModelParams& params, const NoiseChange& change) {
    change.validate();
    return mean_true_value_variance(params, change.sigma2_after) +
           mean_true_value_variance(params, change.sigma2_before);
}

inline double sharpe_ratio(double e_d, double var_d, double hurdle) {
    if (!(var_d > 0.0)) {
        throw std::domain_error("sharpe_ratio: variance must be positive");
    }
    return (e_d - hurdle) / std::sqrt(var_d);
}

/// Noise on the difference of two sample conversion rates, 2 p (1 - p) / n,
/// and the same expressed on the relative-uplift scale.
inline AbTestNoise ab_test_noise(const AbTestDesign& design) {
    if (!(design.p > 0.0 && design.p < 1.0)) {
        throw std::domain_error("ab_test_noise: conversion rate must lie in (0, 1)");
    }
    if (design.n < 1) {
        throw std::domain_error("ab_test_noise: sample size must be at least 1");
    }
    const double absolute = 2.0 * design.p * (1.0 - design.p) / static_cast<double>(design.n);
    return {absolute, absolute / (design.p * design.p)};
}

inline AnalyticReport analytic_report(const ModelParams& params, const NoiseChange& change, double hurdle = 0.0) {
    params.validate();
    change.validate();
    AnalyticReport report;
    report.e_v_before = expected_mean_true_value(params, change.sigma2_before);
    report.e_v_after = expected_mean_true_value(params, change.sigma2_after);
    report.e_d = expected_value_gain(params, change);
    report.var_v_before = mean_true_value_variance(params, change.sigma2_before);
    report.var_v_after = mean_true_value_variance(params, change.sigma2_after);
    report.var_d_upper_bound = report.var_v_before + report.var_v_after;
    if (params.mu_x == 0.0) {
        report.relative_gain = relative_gain(params.sigma2_x, change);
    }
    report.sharpe_lower_bound = sharpe_ratio(report.e_d, report.var_d_upper_bound, hurdle);
    return report;
}

}  // namespace emvalue
