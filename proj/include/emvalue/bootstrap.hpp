#pragma once

// Nonparametric bootstrap with percentile intervals.

#include "emvalue/parallel.hpp"
#include "emvalue/stats_core.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace emvalue {

enum class Statistic { mean, variance };

inline std::string_view to_string(Statistic s) { return s == Statistic::mean ? "mean" : "variance"; }

struct BootstrapSummary {
    Statistic statistic = Statistic::mean;
    double point = 0.0;           ///< statistic of the original sample
    double lower = 0.0;
    double upper = 0.0;
    double replicate_mean = 0.0;  ///< mean of the bootstrap replicates
    double confidence = 0.95;
    std::size_t resamples = 0;
};

/// Mean computed around the first element, which makes constant samples
/// reproduce their value exactly.
inline double sample_mean(std::span<const double> xs) {
    if (xs.empty()) {
        throw std::domain_error("sample_mean: empty sample");
    }
    const double pivot = xs.front();
    double acc = 0.0;
    for (const double x : xs) {
        acc += x - pivot;
    }
    return pivot + acc / static_cast<double>(xs.size());
}

/// Unbiased (n - 1) sample variance; 0 for a single observation.
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) {
        if (xs.empty()) {
            throw std::domain_error("sample_variance: empty sample");
        }
        return 0.0;
    }
    const double mean = sample_mean(xs);
    double acc = 0.0;
    for (const double x : xs) {
        acc += (x - mean) * (x - mean);
    }
    return acc / static_cast<double>(xs.size() - 1);
}

inline double compute_statistic(Statistic s, std::span<const double> xs) {
    return s == Statistic::mean ? sample_mean(xs) : sample_variance(xs);
}

/// Quantile of an ascending-sorted sample, linear interpolation between order
/// statistics (the "type 7" definition).
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw std::domain_error("quantile_sorted: empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::domain_error("quantile_sorted: level outside [0, 1]");
    }
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double percentile(std::span<const double> xs, double q) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    return quantile_sorted(sorted, q);
}

/// Statistic of each of `resamples` with-replacement resamples. Resample b
/// draws from its own lane of `rng`, so the result is independent of threading.
template <typename Fn>
std::vector<double> bootstrap_replicates(std::span<const double> samples, std::size_t resamples, RngStream rng,
                                         Fn&& statistic) {
    if (samples.empty()) {
        throw std::domain_error("bootstrap: empty sample");
    }
    std::vector<double> replicates(resamples);
    parallel_for_chunks(resamples, [&](std::size_t begin, std::size_t end) {
        std::vector<double> resample(samples.size());
        for (std::size_t b = begin; b < end; ++b) {
            PhiloxEngine engine(rng, static_cast<std::uint32_t>(b));
            for (auto& x : resample) {
                x = samples[engine.below(samples.size())];
            }
            replicates[b] = statistic(std::span<const double>(resample));
        }
    });
    return replicates;
}

inline BootstrapSummary bootstrap_ci(std::span<const double> samples, Statistic statistic, std::size_t resamples,
                                     double confidence, RngStream rng) {
    if (samples.empty()) {
        throw std::domain_error("bootstrap_ci: empty sample");
    }
    if (resamples < 100) {
        throw std::domain_error("bootstrap_ci: at least 100 resamples required");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw std::domain_error("bootstrap_ci: confidence must lie in (0, 1)");
    }
    std::vector<double> replicates = bootstrap_replicates(
        samples, resamples, rng, [statistic](std::span<const double> xs) { return compute_statistic(statistic, xs); });

    BootstrapSummary summary;
    summary.statistic = statistic;
    summary.point = compute_statistic(statistic, samples);
    summary.replicate_mean = sample_mean(replicates);
    summary.confidence = confidence;
    summary.resamples = resamples;
    std::sort(replicates.begin(), replicates.end());
    summary.lower = quantile_sorted(replicates, 0.5 * (1.0 - confidence));
    summary.upper = quantile_sorted(replicates, 0.5 * (1.0 + confidence));
    return summary;
}

[[nodiscard]] inline bool contains(const BootstrapSummary& ci, double value) {
    return ci.lower <= value && value <= ci.upper;
}

}  // namespace emvalue
