#pragma once

// Monte-Carlo engine for V and D.
//
// One cycle: draw N true values, draw noise at the "before" level, select the
// M largest estimates and average their true values (V_before); then, keeping
// the same true values, draw fresh noise at the "after" level, select again
// (V_after); D = V_after - V_before.
//
// Every cycle reads from its own substream (stream_id = cycle index) with one
// lane per purpose, so the outcome of a cycle depends only on (seed, cycle).

#include "emvalue/bootstrap.hpp"
#include "emvalue/gaussian_model.hpp"
#include "emvalue/parallel.hpp"
#include "emvalue/stats_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace emvalue {

struct Family {
    enum class Kind { gaussian, generalized_t };
    Kind kind = Kind::gaussian;
    double dof = 3.0;
    bool match_variance = false;

    static Family gaussian() { return {}; }
    static Family student_t(double dof = 3.0, bool match_variance = false) {
        return {Kind::generalized_t, dof, match_variance};
    }

    void validate() const {
        if (kind == Kind::generalized_t && (!(dof > 2.0) || !std::isfinite(dof))) {
            throw std::domain_error("t family: degrees of freedom must exceed 2");
        }
    }
};

struct SimulationConfig {
    ModelParams params;
    NoiseChange change;
    std::size_t cycles = 1000;
    std::uint64_t seed = 0;
    Family family;
    /// Share of propositions measured at the reduced noise level on the second pass.
    double partial_p = 1.0;

    void validate() const {
        params.validate();
        change.validate();
        family.validate();
        if (cycles < 1) {
            throw std::domain_error("simulation: cycles must be at least 1");
        }
        if (!(partial_p >= 0.0 && partial_p <= 1.0)) {
            throw std::domain_error("simulation: partial_p must lie in [0, 1]");
        }
    }
};

struct CycleOutcome {
    std::vector<std::size_t> selected_before;  ///< zero-based, ascending
    std::vector<std::size_t> selected_after;
    double v_before = 0.0;
    double v_after = 0.0;
    double d = 0.0;
    double v_oracle = 0.0;  ///< mean of the true top-M values
};

struct SimulationRun {
    SimulationConfig config;
    std::vector<double> v_before;
    std::vector<double> v_after;
    std::vector<double> d;
};

namespace detail {

enum Lane : std::uint32_t { true_values = 0, noise_before = 1, noise_after = 2, reduced_subset = 3 };

/// Standard variate of the family; for t it is pre-multiplied by the
/// variance-matching factor when requested.
class FamilySampler {
public:
    explicit FamilySampler(const Family& family)
        : family_(family),
          factor_(family.kind == Family::Kind::generalized_t && family.match_variance
                      ? std::sqrt((family.dof - 2.0) / family.dof)
                      : 1.0) {}

    double operator()(PhiloxEngine& engine) const {
        if (family_.kind == Family::Kind::gaussian) {
            return engine.normal();
        }
        return factor_ * engine.student_t(family_.dof);
    }

private:
    Family family_;
    double factor_;
};

struct CycleWorkspace {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> sd_after;
    std::vector<std::size_t> order;

    void resize(std::size_t n) {
        x.resize(n);
        y.resize(n);
        sd_after.resize(n);
        order.resize(n);
    }
};

/// Zero-based indices of the m largest y, ties broken by the lower index,
/// returned in ascending index order.
inline void select_top(std::span<const double> y, std::size_t m, std::vector<std::size_t>& order) {
    order.resize(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto higher = [&y](std::size_t a, std::size_t b) { return y[a] > y[b] || (y[a] == y[b] && a < b); };
    if (m < y.size()) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m) - 1, order.end(), higher);
    }
    order.resize(m);
    std::sort(order.begin(), order.end());
}

inline double mean_over(std::span<const double> values, std::span<const std::size_t> indices) {
    double sum = 0.0;
    for (const std::size_t i : indices) {
        sum += values[i];
    }
    return sum / static_cast<double>(indices.size());
}

inline std::size_t reduced_count(const SimulationConfig& config) {
    const auto n = static_cast<std::size_t>(config.params.n);
    if (config.partial_p >= 1.0) {
        return n;
    }
    return std::min(n, static_cast<std::size_t>(std::floor(config.partial_p * static_cast<double>(n))));
}

inline CycleOutcome run_cycle(const SimulationConfig& config, std::uint64_t cycle_id, CycleWorkspace& ws,
                              bool keep_indices) {
    const auto n = static_cast<std::size_t>(config.params.n);
    const auto m = static_cast<std::size_t>(config.params.m);
    const RngStream stream{config.seed, cycle_id};
    const FamilySampler standard(config.family);
    ws.resize(n);

    const double sd_x = std::sqrt(config.params.sigma2_x);
    const double sd_before = std::sqrt(config.change.sigma2_before);
    const double sd_after = std::sqrt(config.change.sigma2_after);
    const double mu_eps = config.params.mu_eps;

    PhiloxEngine x_engine(stream, true_values);
    for (auto& x : ws.x) {
        x = config.params.mu_x + sd_x * standard(x_engine);
    }

    CycleOutcome out;
    std::vector<std::size_t> chosen;

    PhiloxEngine before_engine(stream, noise_before);
    for (std::size_t i = 0; i < n; ++i) {
        ws.y[i] = ws.x[i] + (mu_eps + sd_before * standard(before_engine));
    }
    select_top(ws.y, m, chosen);
    out.v_before = mean_over(ws.x, chosen);
    if (keep_indices) {
        out.selected_before = chosen;
    }

    // Propositions measured at the reduced level: a uniformly random subset of
    // floor(p N), by partial Fisher-Yates on its own lane.
    const std::size_t reduced = reduced_count(config);
    if (reduced == n) {
        std::fill(ws.sd_after.begin(), ws.sd_after.end(), sd_after);
    } else {
        std::fill(ws.sd_after.begin(), ws.sd_after.end(), sd_before);
        if (reduced > 0) {
            PhiloxEngine subset_engine(stream, reduced_subset);
            std::iota(ws.order.begin(), ws.order.end(), std::size_t{0});
            for (std::size_t k = 0; k < reduced; ++k) {
                const std::size_t j = k + subset_engine.below(n - k);
                std::swap(ws.order[k], ws.order[j]);
                ws.sd_after[ws.order[k]] = sd_after;
            }
        }
    }

    PhiloxEngine after_engine(stream, noise_after);
    for (std::size_t i = 0; i < n; ++i) {
        ws.y[i] = ws.x[i] + (mu_eps + ws.sd_after[i] * standard(after_engine));
    }
    select_top(ws.y, m, chosen);
    out.v_after = mean_over(ws.x, chosen);
    if (keep_indices) {
        out.selected_after = chosen;
    }
    out.d = out.v_after - out.v_before;

    if (keep_indices) {
        select_top(ws.x, m, chosen);
        out.v_oracle = mean_over(ws.x, chosen);
    }
    return out;
}

}  // namespace detail

/// One cycle with full detail (selected sets and the perfect-selection value).
inline CycleOutcome run_cycle(const SimulationConfig& config, std::uint64_t cycle_id) {
    config.validate();
    if (cycle_id >= config.cycles) {
        throw std::domain_error("run_cycle: cycle id outside [0, cycles)");
    }
    detail::CycleWorkspace ws;
    return detail::run_cycle(config, cycle_id, ws, true);
}

inline SimulationRun run_simulation(const SimulationConfig& config) {
    config.validate();
    SimulationRun run;
    run.config = config;
    run.v_before.resize(config.cycles);
    run.v_after.resize(config.cycles);
    run.d.resize(config.cycles);
    parallel_for_chunks(config.cycles, [&](std::size_t begin, std::size_t end) {
        detail::CycleWorkspace ws;
        for (std::size_t c = begin; c < end; ++c) {
            const CycleOutcome out = detail::run_cycle(config, c, ws, false);
            run.v_before[c] = out.v_before;
            run.v_after[c] = out.v_after;
            run.d[c] = out.d;
        }
    });
    return run;
}

/// Stream used for bootstrap resampling of a simulation's outputs; far above
/// any cycle index so it never collides with a cycle substream.
inline RngStream bootstrap_stream(std::uint64_t seed, std::uint64_t label) {
    return RngStream{seed, (std::uint64_t{1} << 63) | label};
}

/// Empirical Var(D) (mean of the bootstrap variance replicates) divided by
/// the analytic bound, per configuration.
inline std::vector<double> ratio_experiment(std::span<const SimulationConfig> configs, std::size_t resamples) {
    std::vector<double> ratios(configs.size());
    parallel_for(configs.size(), [&](std::size_t i) {
        const SimulationConfig& config = configs[i];
        const SimulationRun run = run_simulation(config);
        const BootstrapSummary var_d =
            bootstrap_ci(run.d, Statistic::variance, resamples, 0.95, bootstrap_stream(config.seed, 4));
        ratios[i] = var_d.replicate_mean / value_gain_variance_bound(config.params, config.change);
    });
    return ratios;
}

struct PartialSweepRow {
    double p = 0.0;
    double mean_d = 0.0;
    double p5_d = 0.0;
    double p95_d = 0.0;
    double se_d = 0.0;  ///< standard error of mean_d
};

/// D statistics for each share p of propositions measured at the reduced
/// noise level; every p reuses the configuration's seed.
inline std::vector<PartialSweepRow> partial_sweep(const SimulationConfig& config, std::span<const double> p_grid) {
    if (!std::is_sorted(p_grid.begin(), p_grid.end())) {
        throw std::domain_error("partial_sweep: p grid must be ascending");
    }
    std::vector<PartialSweepRow> rows;
    rows.reserve(p_grid.size());
    for (const double p : p_grid) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::domain_error("partial_sweep: p outside [0, 1]");
        }
        SimulationConfig c = config;
        c.partial_p = p;
        const SimulationRun run = run_simulation(c);
        PartialSweepRow row;
        row.p = p;
        row.mean_d = sample_mean(run.d);
        row.se_d = std::sqrt(sample_variance(run.d) / static_cast<double>(run.d.size()));
        std::vector<double> sorted = run.d;
        std::sort(sorted.begin(), sorted.end());
        row.p5_d = quantile_sorted(sorted, 0.05);
        row.p95_d = quantile_sorted(sorted, 0.95);
        rows.push_back(row);
    }
    return rows;
}

struct FamilyComparison {
    double mean_d_gaussian = 0.0;
    double mean_d_t = 0.0;
    double p95_d_gaussian = 0.0;
    double p95_d_t = 0.0;
};

/// Runs each configuration under the Gaussian family and under `t_family`
/// with otherwise identical parameters.
inline std::vector<FamilyComparison> compare_families(std::span<const SimulationConfig> configs,
                                                      const Family& t_family) {
    std::vector<FamilyComparison> out(configs.size());
    parallel_for(configs.size(), [&](std::size_t i) {
        SimulationConfig g = configs[i];
        g.family = Family::gaussian();
        SimulationConfig t = configs[i];
        t.family = t_family;
        const SimulationRun rg = run_simulation(g);
        const SimulationRun rt = run_simulation(t);
        out[i].mean_d_gaussian = sample_mean(rg.d);
        out[i].mean_d_t = sample_mean(rt.d);
        out[i].p95_d_gaussian = percentile(rg.d, 0.95);
        out[i].p95_d_t = percentile(rt.d, 0.95);
    });
    return out;
}

}  // namespace emvalue
