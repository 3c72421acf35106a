#pragma once

// Subcommand implementations. Each command is a pure function of its inputs
// returning the result document and the contents of any files to write, so
// the executable only does argument parsing and I/O.

#include "emvalue/bootstrap.hpp"
#include "emvalue/case_studies.hpp"
#include "emvalue/coverage.hpp"
#include "emvalue/gaussian_model.hpp"
#include "emvalue/scenario.hpp"
#include "emvalue/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace emvalue {

inline constexpr const char* kToolVersion = "0.1.0";

struct OutputFile {
    std::string name;  ///< relative to the output location chosen by the caller
    std::string contents;
};

struct CommandOutput {
    json document;
    std::vector<OutputFile> files;
};

namespace detail {

inline json make_document(const std::string& command, json result, std::optional<std::uint64_t> seed,
                          const json& config) {
    return json{{"command", command},
                {"result", std::move(result)},
                {"meta",
                 {{"tool_version", kToolVersion},
                  {"seed", seed ? json(*seed) : json(nullptr)},
                  {"config_digest", config_digest(config)}}}};
}

inline json moments_json(const std::vector<double>& xs, std::size_t resamples, RngStream mean_rng,
                         RngStream var_rng) {
    const BootstrapSummary mean = bootstrap_ci(xs, Statistic::mean, resamples, 0.95, mean_rng);
    const BootstrapSummary var = bootstrap_ci(xs, Statistic::variance, resamples, 0.95, var_rng);
    return json{{"mean", mean.point},
                {"variance", var.point},
                {"mean_ci", {mean.lower, mean.upper}},
                {"variance_ci", {var.lower, var.upper}}};
}

inline std::string csv_line(std::initializer_list<std::string> cells) {
    std::string line;
    bool first = true;
    for (const auto& c : cells) {
        if (!first) {
            line += ',';
        }
        line += c;
        first = false;
    }
    line += '\n';
    return line;
}

inline std::string noise_label(double sigma2) { return format_number(std::sqrt(sigma2)); }

}  // namespace detail

inline CommandOutput cmd_analytic(const Scenario& scenario) {
    const AnalyticReport report = analytic_report(scenario.params, scenario.change, scenario.hurdle);
    json result = to_json(report);
    result["params"] = to_json(scenario.params);
    result["change"] = to_json(scenario.change);
    result["hurdle"] = scenario.hurdle;
    return {detail::make_document("analytic", std::move(result), std::nullopt, scenario.canonical), {}};
}

inline CommandOutput cmd_simulate(const Scenario& scenario, bool emit_samples, std::size_t resamples = 1000) {
    if (resamples < 100) {
        throw ConfigError("--resamples", "must be at least 100");
    }
    const SimulationConfig config = scenario.simulation_config();
    const SimulationRun run = run_simulation(config);

    json result;
    result["cycles"] = config.cycles;
    result["resamples"] = resamples;
    result["v_before"] = detail::moments_json(run.v_before, resamples, bootstrap_stream(config.seed, 0),
                                              bootstrap_stream(config.seed, 1));
    result["v_after"] = detail::moments_json(run.v_after, resamples, bootstrap_stream(config.seed, 2),
                                             bootstrap_stream(config.seed, 3));
    result["d"] = detail::moments_json(run.d, resamples, bootstrap_stream(config.seed, 4),
                                       bootstrap_stream(config.seed, 5));
    if (config.family.kind == Family::Kind::gaussian && config.partial_p == 1.0) {
        result["analytic"] = to_json(analytic_report(config.params, config.change, scenario.hurdle));
    } else {
        result["analytic"] = nullptr;
    }

    CommandOutput out{detail::make_document("simulate", std::move(result), config.seed, scenario.canonical), {}};
    if (emit_samples) {
        std::string csv = "cycle,v_before,v_after,d\n";
        for (std::size_t c = 0; c < config.cycles; ++c) {
            csv += detail::csv_line({std::to_string(c), format_number(run.v_before[c]),
                                     format_number(run.v_after[c]), format_number(run.d[c])});
        }
        out.files.push_back({"samples.csv", std::move(csv)});
    }
    return out;
}

inline CommandOutput cmd_verify(std::size_t runs, std::size_t cycles, std::size_t resamples, std::uint64_t seed,
                                const ParameterSpace& space = {}) {
    if (runs < 1) {
        throw ConfigError("--runs", "must be at least 1");
    }
    if (cycles < 2) {
        throw ConfigError("--cycles", "must be at least 2");
    }
    if (resamples < 100) {
        throw ConfigError("--resamples", "must be at least 100");
    }
    const CoverageReport report = coverage_experiment(runs, cycles, resamples, space, seed);
    json result = to_json(report);
    result["param_space"] = to_json(space);
    const json config{{"command", "verify"}, {"runs", runs},   {"cycles", cycles},
                      {"resamples", resamples}, {"seed", seed}, {"param_space", to_json(space)}};
    return {detail::make_document("verify", std::move(result), seed, config), {}};
}

inline std::string sweep_file_name(const CaseStudyPreset& preset, const NoiseChange& change) {
    return preset.name + "_" + detail::noise_label(change.sigma2_before) + "_" +
           detail::noise_label(change.sigma2_after) + ".csv";
}

inline CommandOutput cmd_case_study(const std::string& name, std::size_t cycles, std::uint64_t seed) {
    if (cycles < 2) {
        throw ConfigError("--cycles", "must be at least 2");
    }
    CaseStudyPreset p;
    try {
        p = preset(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("name", e.what());
    }
    const std::vector<SweepRow> rows = run_sweep(p, cycles, seed);

    CommandOutput out;
    json tables = json::array();
    for (std::size_t k = 0; k < p.noise_grid.size(); ++k) {
        std::string csv = "m,analytic_e_d,mc_mean_d,mc_p5_d,mc_p95_d\n";
        json table_rows = json::array();
        for (std::size_t j = 0; j < p.m_grid.size(); ++j) {
            const SweepRow& r = rows[sweep_row_index(k, j, p.m_grid.size())];
            csv += detail::csv_line({std::to_string(r.m), format_number(r.analytic_e_d), format_number(r.mc_mean_d),
                                     format_number(r.mc_p5_d), format_number(r.mc_p95_d)});
            table_rows.push_back(json{{"m", r.m},
                                      {"analytic_e_d", r.analytic_e_d},
                                      {"mc_mean_d", r.mc_mean_d},
                                      {"mc_p5_d", r.mc_p5_d},
                                      {"mc_p95_d", r.mc_p95_d},
                                      {"mc_ci", {r.mc_ci_lower, r.mc_ci_upper}},
                                      {"seed", r.seed}});
        }
        const std::string file = sweep_file_name(p, p.noise_grid[k]);
        tables.push_back(json{{"file", file},
                              {"sigma2_1", p.noise_grid[k].sigma2_before},
                              {"sigma2_2", p.noise_grid[k].sigma2_after},
                              {"rows", std::move(table_rows)}});
        out.files.push_back({file, std::move(csv)});
    }
    json result{{"preset", to_json(p)}, {"cycles", cycles}, {"tables", std::move(tables)}};
    const json config{{"command", "case-study"}, {"name", name}, {"cycles", cycles}, {"seed", seed}};
    out.document = detail::make_document("case-study", std::move(result), seed, config);
    return out;
}

struct HistogramBin {
    double lower = 0.0;
    double upper = 0.0;  ///< +inf for the overflow bin
    std::size_t count = 0;
};

/// 20 equal bins over [0, 1) plus an overflow bin for ratios >= 1.
inline std::vector<HistogramBin> ratio_histogram(const std::vector<double>& ratios) {
    constexpr std::size_t bins = 20;
    std::vector<HistogramBin> out(bins + 1);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lower = static_cast<double>(b) / bins;
        out[b].upper = static_cast<double>(b + 1) / bins;
    }
    out[bins].lower = 1.0;
    out[bins].upper = std::numeric_limits<double>::infinity();
    for (const double r : ratios) {
        const auto b = r >= 1.0 ? bins : static_cast<std::size_t>(std::max(0.0, std::floor(r * bins)));
        ++out[std::min(b, bins)].count;
    }
    return out;
}

/// Configurations of the variance-ratio experiment; run i draws its
/// parameters the same way the verification harness does.
inline std::vector<SimulationConfig> ratio_configs(std::size_t runs, std::size_t cycles, std::uint64_t seed,
                                                   const ParameterSpace& space = {}) {
    std::vector<SimulationConfig> configs;
    configs.reserve(runs);
    for (std::size_t i = 0; i < runs; ++i) {
        configs.push_back(coverage_config(space, cycles, seed, i));
    }
    return configs;
}

inline CommandOutput cmd_ratio_experiment(std::size_t runs, std::size_t cycles, std::size_t resamples,
                                          std::uint64_t seed, const ParameterSpace& space = {}) {
    if (runs < 1) {
        throw ConfigError("--runs", "must be at least 1");
    }
    if (cycles < 2) {
        throw ConfigError("--cycles", "must be at least 2");
    }
    if (resamples < 100) {
        throw ConfigError("--resamples", "must be at least 100");
    }
    const std::vector<SimulationConfig> configs = ratio_configs(runs, cycles, seed, space);
    const std::vector<double> ratios = ratio_experiment(configs, resamples);
    const auto histogram = ratio_histogram(ratios);

    std::string csv = "bin_lower,bin_upper,count\n";
    json bins = json::array();
    for (const auto& b : histogram) {
        const std::string upper = std::isinf(b.upper) ? "inf" : format_number(b.upper);
        csv += detail::csv_line({format_number(b.lower), upper, std::to_string(b.count)});
        bins.push_back(json{{"lower", b.lower},
                            {"upper", std::isinf(b.upper) ? json(nullptr) : json(b.upper)},
                            {"count", b.count}});
    }
    const auto at_most = static_cast<double>(std::count_if(ratios.begin(), ratios.end(),
                                                           [](double r) { return r <= 0.40; }));
    json result{{"runs", runs},
                {"cycles", cycles},
                {"resamples", resamples},
                {"ratios", ratios},
                {"fraction_at_most_0_4", at_most / static_cast<double>(runs)},
                {"max_ratio", *std::max_element(ratios.begin(), ratios.end())},
                {"histogram", std::move(bins)},
                {"param_space", to_json(space)}};
    const json config{{"command", "ratio-experiment"}, {"runs", runs}, {"cycles", cycles},
                      {"resamples", resamples}, {"seed", seed}, {"param_space", to_json(space)}};
    return {detail::make_document("ratio-experiment", std::move(result), seed, config),
            {{"ratio_histogram.csv", std::move(csv)}}};
}

inline CommandOutput cmd_partial_sweep(const Scenario& scenario, const std::vector<double>& p_grid) {
    if (p_grid.empty()) {
        throw ConfigError("--p-grid", "must list at least one value");
    }
    for (const double p : p_grid) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw ConfigError("--p-grid", "values must lie in [0, 1]");
        }
    }
    if (!std::is_sorted(p_grid.begin(), p_grid.end())) {
        throw ConfigError("--p-grid", "values must be ascending");
    }
    const SimulationConfig config = scenario.simulation_config();
    const std::vector<PartialSweepRow> rows = partial_sweep(config, p_grid);

    std::string csv = "p,mean_d,p5_d,p95_d\n";
    json table = json::array();
    for (const auto& r : rows) {
        csv += detail::csv_line(
            {format_number(r.p), format_number(r.mean_d), format_number(r.p5_d), format_number(r.p95_d)});
        table.push_back(
            json{{"p", r.p}, {"mean_d", r.mean_d}, {"p5_d", r.p5_d}, {"p95_d", r.p95_d}, {"se_d", r.se_d}});
    }
    json config_doc = scenario.canonical;
    config_doc["p_grid"] = p_grid;
    return {detail::make_document("partial-sweep", json{{"rows", std::move(table)}}, config.seed, config_doc),
            {{"partial_sweep.csv", std::move(csv)}}};
}

/// Document with the tool version blanked, for reproducibility comparisons.
inline json without_version(json document) {
    document["meta"]["tool_version"] = nullptr;
    return document;
}

}  // namespace emvalue
