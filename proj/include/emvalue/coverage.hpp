#pragma once

// Verification harness: simulate random scenarios and count how often the
// analytic moments fall inside the bootstrap intervals of the simulated ones.

#include "emvalue/bootstrap.hpp"
#include "emvalue/gaussian_model.hpp"
#include "emvalue/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace emvalue {

/// Ranges random scenarios are drawn from. "log" ranges are log-uniform.
struct ParameterSpace {
    std::int64_t n_min = 20;             // log
    std::int64_t n_max = 5000;
    double m_max_fraction = 0.5;         // M log-uniform in [1, fraction * N]
    double mu_x_min = -1.0;
    double mu_x_max = 1.0;
    double mu_eps_min = -1.0;
    double mu_eps_max = 1.0;
    double sigma_x_min = 0.1;            // log
    double sigma_x_max = 2.0;
    double sigma_before_min_ratio = 0.1; // sigma_1 / sigma_x, uniform
    double sigma_before_max_ratio = 2.0;
    // sigma_2 is uniform in [0, sigma_1).

    void validate() const {
        if (n_min < 2 || n_max < n_min) {
            throw std::domain_error("parameter space: need 2 <= n_min <= n_max");
        }
        if (!(m_max_fraction > 0.0 && m_max_fraction <= 1.0)) {
            throw std::domain_error("parameter space: m_max_fraction must lie in (0, 1]");
        }
        if (!(sigma_x_min > 0.0 && sigma_x_max >= sigma_x_min)) {
            throw std::domain_error("parameter space: invalid sigma_x range");
        }
        if (!(sigma_before_min_ratio >= 0.0 && sigma_before_max_ratio >= sigma_before_min_ratio)) {
            throw std::domain_error("parameter space: invalid sigma_1 ratio range");
        }
        if (!(mu_x_max >= mu_x_min && mu_eps_max >= mu_eps_min)) {
            throw std::domain_error("parameter space: invalid mean range");
        }
    }

    [[nodiscard]] std::pair<ModelParams, NoiseChange> sample(RngStream rng) const {
        validate();
        PhiloxEngine engine(rng);
        auto log_uniform = [&engine](double lo, double hi) {
            return std::exp(std::log(lo) + engine.uniform() * (std::log(hi) - std::log(lo)));
        };
        auto uniform = [&engine](double lo, double hi) { return lo + engine.uniform() * (hi - lo); };

        ModelParams params;
        params.n = std::llround(log_uniform(static_cast<double>(n_min), static_cast<double>(n_max)));
        const double m_cap = std::max(1.0, std::floor(m_max_fraction * static_cast<double>(params.n)));
        params.m = std::clamp<std::int64_t>(std::llround(log_uniform(1.0, m_cap)), 1, params.n);
        params.mu_x = uniform(mu_x_min, mu_x_max);
        params.mu_eps = uniform(mu_eps_min, mu_eps_max);
        const double sigma_x = log_uniform(sigma_x_min, sigma_x_max);
        params.sigma2_x = sigma_x * sigma_x;
        const double sigma_before = sigma_x * uniform(sigma_before_min_ratio, sigma_before_max_ratio);
        const double sigma_after = sigma_before * engine.uniform();
        return {params, NoiseChange{sigma_before * sigma_before, sigma_after * sigma_after}};
    }
};

/// The five verified quantities, in reporting order.
enum class Quantity : std::size_t { e_v_before = 0, var_v_before, e_v_after, var_v_after, e_d };
inline constexpr std::size_t kQuantityCount = 5;

inline std::string_view to_string(Quantity q) {
    constexpr std::array<std::string_view, kQuantityCount> names{"e_v_before", "var_v_before", "e_v_after",
                                                                 "var_v_after", "e_d"};
    return names[static_cast<std::size_t>(q)];
}

struct CoverageTally {
    std::size_t hits = 0;
    std::size_t misses_below = 0;  ///< analytic value below the interval
    std::size_t misses_above = 0;
};

struct CoverageReport {
    std::size_t runs = 0;
    std::size_t cycles = 0;
    std::size_t resamples = 0;
    double confidence = 0.95;
    std::array<CoverageTally, kQuantityCount> tallies{};

    [[nodiscard]] const CoverageTally& operator[](Quantity q) const { return tallies[static_cast<std::size_t>(q)]; }
    [[nodiscard]] double hit_rate(Quantity q) const {
        return static_cast<double>((*this)[q].hits) / static_cast<double>(runs);
    }
};

/// Outcome of one verification run, kept for reporting.
struct CoverageRun {
    ModelParams params;
    NoiseChange change;
    std::array<double, kQuantityCount> analytic{};
    std::array<BootstrapSummary, kQuantityCount> intervals{};
};

/// Scenario of run i: parameters drawn from its own stream, simulation seeded
/// from a derived seed.
inline SimulationConfig coverage_config(const ParameterSpace& space, std::size_t cycles, std::uint64_t seed,
                                        std::size_t run) {
    auto [params, change] = space.sample(RngStream{derive_seed(seed, 0x5041524DULL), run});
    SimulationConfig config;
    config.params = params;
    config.change = change;
    config.cycles = cycles;
    config.seed = derive_seed(seed, run);
    return config;
}

inline CoverageRun verify_once(const SimulationConfig& config, std::size_t resamples, double confidence) {
    const SimulationRun sim = run_simulation(config);
    CoverageRun out;
    out.params = config.params;
    out.change = config.change;
    const ModelParams& p = config.params;
    out.analytic = {expected_mean_true_value(p, config.change.sigma2_before),
                    mean_true_value_variance(p, config.change.sigma2_before),
                    expected_mean_true_value(p, config.change.sigma2_after),
                    mean_true_value_variance(p, config.change.sigma2_after),
                    expected_value_gain(p, config.change)};
    const std::array<std::pair<const std::vector<double>*, Statistic>, kQuantityCount> sources{{
        {&sim.v_before, Statistic::mean},
        {&sim.v_before, Statistic::variance},
        {&sim.v_after, Statistic::mean},
        {&sim.v_after, Statistic::variance},
        {&sim.d, Statistic::mean},
    }};
    for (std::size_t k = 0; k < kQuantityCount; ++k) {
        out.intervals[k] =
            bootstrap_ci(*sources[k].first, sources[k].second, resamples, confidence, bootstrap_stream(config.seed, k));
    }
    return out;
}

inline CoverageReport coverage_experiment(std::size_t runs, std::size_t cycles, std::size_t resamples,
                                          const ParameterSpace& space, std::uint64_t seed,
                                          std::vector<CoverageRun>* details = nullptr, double confidence = 0.95) {
    if (runs < 1) {
        throw std::domain_error("coverage_experiment: runs must be at least 1");
    }
    space.validate();
    std::vector<CoverageRun> results(runs);
    parallel_for(runs, [&](std::size_t i) {
        results[i] = verify_once(coverage_config(space, cycles, seed, i), resamples, confidence);
    });

    CoverageReport report;
    report.runs = runs;
    report.cycles = cycles;
    report.resamples = resamples;
    report.confidence = confidence;
    for (const CoverageRun& r : results) {
        for (std::size_t k = 0; k < kQuantityCount; ++k) {
            CoverageTally& t = report.tallies[k];
            if (r.analytic[k] < r.intervals[k].lower) {
                ++t.misses_below;
            } else if (r.analytic[k] > r.intervals[k].upper) {
                ++t.misses_above;
            } else {
                ++t.hits;
            }
        }
    }
    if (details != nullptr) {
        *details = std::move(results);
    }
    return report;
}

}  // namespace emvalue
