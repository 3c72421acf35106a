#pragma once

// Scenario files and JSON conversions for the command-line front end.
//
// Scenario document:
//   {
//     "params":     {"n", "m", "mu_x", "sigma2_x", "mu_eps", "alpha"?},
//     "change":     {"sigma2_1", "sigma2_2"},
//     "simulation"? {"cycles", "seed", "family": "gaussian" | "t", "dof"?,
//                    "match_variance"?, "partial_p"?},
//     "sharpe"?     {"hurdle"}
//   }
// All rates are fractions (0.01 means 1%). Unknown keys are rejected.

#include "emvalue/case_studies.hpp"
#include "emvalue/coverage.hpp"
#include "emvalue/gaussian_model.hpp"
#include "emvalue/simulator.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>

namespace emvalue {

using nlohmann::json;

/// Invalid configuration; carries the offending field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimulationSettings {
    std::size_t cycles = 1000;
    std::uint64_t seed = 0;
    Family family;
    double partial_p = 1.0;
};

struct Scenario {
    ModelParams params;
    NoiseChange change;
    std::optional<SimulationSettings> simulation;
    double hurdle = 0.0;
    json canonical;  ///< validated source document

    [[nodiscard]] SimulationConfig simulation_config() const {
        if (!simulation) {
            throw ConfigError("simulation", "missing required block");
        }
        SimulationConfig c;
        c.params = params;
        c.change = change;
        c.cycles = simulation->cycles;
        c.seed = simulation->seed;
        c.family = simulation->family;
        c.partial_p = simulation->partial_p;
        return c;
    }
};

namespace detail {

inline std::string join_path(const std::string& base, std::string_view key) {
    return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline const json& require_object(const json& parent, const std::string& path) {
    if (!parent.is_object()) {
        throw ConfigError(path, "expected an object");
    }
    return parent;
}

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<std::string_view> known) {
    for (const auto& item : obj.items()) {
        bool found = false;
        for (const auto k : known) {
            found = found || item.key() == k;
        }
        if (!found) {
            throw ConfigError(join_path(path, item.key()), "unknown key");
        }
    }
}

inline const json& field(const json& obj, const std::string& path, std::string_view key) {
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) {
        throw ConfigError(join_path(path, key), "missing required field");
    }
    return *it;
}

inline double read_number(const json& value, const std::string& path) {
    if (!value.is_number()) {
        throw ConfigError(path, "expected a number");
    }
    const double v = value.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(path, "must be finite");
    }
    return v;
}

inline std::int64_t read_integer(const json& value, const std::string& path) {
    if (!value.is_number_integer()) {
        throw ConfigError(path, "expected an integer");
    }
    return value.get<std::int64_t>();
}

inline std::uint64_t read_unsigned(const json& value, const std::string& path) {
    if (!value.is_number_unsigned()) {
        throw ConfigError(path, "expected a non-negative integer");
    }
    return value.get<std::uint64_t>();
}

inline double number_field(const json& obj, const std::string& path, std::string_view key) {
    return read_number(field(obj, path, key), join_path(path, key));
}

}  // namespace detail

inline Scenario parse_scenario(const json& doc) {
    using namespace detail;
    require_object(doc, "");
    reject_unknown(doc, "", {"params", "change", "simulation", "sharpe"});

    Scenario s;
    const json& params = require_object(field(doc, "", "params"), "params");
    reject_unknown(params, "params", {"n", "m", "mu_x", "sigma2_x", "mu_eps", "alpha"});
    s.params.n = read_integer(field(params, "params", "n"), "params.n");
    s.params.m = read_integer(field(params, "params", "m"), "params.m");
    s.params.mu_x = number_field(params, "params", "mu_x");
    s.params.sigma2_x = number_field(params, "params", "sigma2_x");
    s.params.mu_eps = number_field(params, "params", "mu_eps");
    if (s.params.n < 2) {
        throw ConfigError("params.n", "must be at least 2");
    }
    if (s.params.m < 1 || s.params.m > s.params.n) {
        throw ConfigError("params.m", "must lie in [1, n]");
    }
    if (!(s.params.sigma2_x > 0.0)) {
        throw ConfigError("params.sigma2_x", "must be positive");
    }
    if (params.contains("alpha")) {
        const double alpha = read_number(params["alpha"], "params.alpha");
        if (!(alpha >= 0.0 && alpha < 0.5)) {
            throw ConfigError("params.alpha", "must lie in [0, 0.5)");
        }
        s.params.alpha = BlomConstant(alpha);
    }

    const json& change = require_object(field(doc, "", "change"), "change");
    reject_unknown(change, "change", {"sigma2_1", "sigma2_2"});
    s.change.sigma2_before = number_field(change, "change", "sigma2_1");
    s.change.sigma2_after = number_field(change, "change", "sigma2_2");
    if (s.change.sigma2_before < 0.0) {
        throw ConfigError("change.sigma2_1", "must be >= 0");
    }
    if (s.change.sigma2_after < 0.0) {
        throw ConfigError("change.sigma2_2", "must be >= 0");
    }

    if (doc.contains("simulation")) {
        const json& sim = require_object(doc["simulation"], "simulation");
        reject_unknown(sim, "simulation", {"cycles", "seed", "family", "dof", "match_variance", "partial_p"});
        SimulationSettings settings;
        const std::int64_t cycles = read_integer(field(sim, "simulation", "cycles"), "simulation.cycles");
        if (cycles < 1) {
            throw ConfigError("simulation.cycles", "must be at least 1");
        }
        settings.cycles = static_cast<std::size_t>(cycles);
        settings.seed = read_unsigned(field(sim, "simulation", "seed"), "simulation.seed");
        const json& family = field(sim, "simulation", "family");
        if (!family.is_string()) {
            throw ConfigError("simulation.family", "expected \"gaussian\" or \"t\"");
        }
        const auto name = family.get<std::string>();
        if (name == "gaussian") {
            settings.family = Family::gaussian();
            if (sim.contains("dof") || sim.contains("match_variance")) {
                throw ConfigError("simulation.family", "dof and match_variance apply to the t family only");
            }
        } else if (name == "t") {
            double dof = 3.0;
            bool match = false;
            if (sim.contains("dof")) {
                dof = read_number(sim["dof"], "simulation.dof");
                if (!(dof > 2.0)) {
                    throw ConfigError("simulation.dof", "must exceed 2");
                }
            }
            if (sim.contains("match_variance")) {
                if (!sim["match_variance"].is_boolean()) {
                    throw ConfigError("simulation.match_variance", "expected a boolean");
                }
                match = sim["match_variance"].get<bool>();
            }
            settings.family = Family::student_t(dof, match);
        } else {
            throw ConfigError("simulation.family", "expected \"gaussian\" or \"t\"");
        }
        if (sim.contains("partial_p")) {
            settings.partial_p = read_number(sim["partial_p"], "simulation.partial_p");
            if (!(settings.partial_p >= 0.0 && settings.partial_p <= 1.0)) {
                throw ConfigError("simulation.partial_p", "must lie in [0, 1]");
            }
        }
        s.simulation = settings;
    }

    if (doc.contains("sharpe")) {
        const json& sharpe = require_object(doc["sharpe"], "sharpe");
        reject_unknown(sharpe, "sharpe", {"hurdle"});
        s.hurdle = number_field(sharpe, "sharpe", "hurdle");
    }
    s.canonical = doc;
    return s;
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError(path + ": cannot open file");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

/// ParameterSpace overrides; every key is optional.
inline ParameterSpace parse_parameter_space(const json& doc) {
    using namespace detail;
    require_object(doc, "param_space");
    reject_unknown(doc, "param_space",
                   {"n_min", "n_max", "m_max_fraction", "mu_x_min", "mu_x_max", "mu_eps_min", "mu_eps_max",
                    "sigma_x_min", "sigma_x_max", "sigma_before_min_ratio", "sigma_before_max_ratio"});
    ParameterSpace space;
    auto num = [&](const char* key, double& out) {
        if (doc.contains(key)) {
            out = read_number(doc[key], join_path("param_space", key));
        }
    };
    if (doc.contains("n_min")) {
        space.n_min = read_integer(doc["n_min"], "param_space.n_min");
    }
    if (doc.contains("n_max")) {
        space.n_max = read_integer(doc["n_max"], "param_space.n_max");
    }
    num("m_max_fraction", space.m_max_fraction);
    num("mu_x_min", space.mu_x_min);
    num("mu_x_max", space.mu_x_max);
    num("mu_eps_min", space.mu_eps_min);
    num("mu_eps_max", space.mu_eps_max);
    num("sigma_x_min", space.sigma_x_min);
    num("sigma_x_max", space.sigma_x_max);
    num("sigma_before_min_ratio", space.sigma_before_min_ratio);
    num("sigma_before_max_ratio", space.sigma_before_max_ratio);
    try {
        space.validate();
    } catch (const std::domain_error& e) {
        throw ConfigError("param_space", e.what());
    }
    return space;
}

inline json to_json(const ParameterSpace& s) {
    return json{{"n_min", s.n_min},
                {"n_max", s.n_max},
                {"m_max_fraction", s.m_max_fraction},
                {"mu_x_min", s.mu_x_min},
                {"mu_x_max", s.mu_x_max},
                {"mu_eps_min", s.mu_eps_min},
                {"mu_eps_max", s.mu_eps_max},
                {"sigma_x_min", s.sigma_x_min},
                {"sigma_x_max", s.sigma_x_max},
                {"sigma_before_min_ratio", s.sigma_before_min_ratio},
                {"sigma_before_max_ratio", s.sigma_before_max_ratio}};
}

inline json to_json(const ModelParams& p) {
    return json{{"n", p.n},           {"m", p.m},           {"mu_x", p.mu_x},
                {"sigma2_x", p.sigma2_x}, {"mu_eps", p.mu_eps}, {"alpha", p.alpha.value()}};
}

inline json to_json(const NoiseChange& c) { return json{{"sigma2_1", c.sigma2_before}, {"sigma2_2", c.sigma2_after}}; }

inline json to_json(const CaseStudyPreset& p) {
    json noise = json::array();
    for (const auto& c : p.noise_grid) {
        noise.push_back(to_json(c));
    }
    return json{{"name", p.name}, {"params", to_json(p.params)}, {"noise_grid", noise}, {"m_grid", p.m_grid}};
}

inline CaseStudyPreset preset_from_json(const json& doc) {
    CaseStudyPreset p;
    p.name = doc.at("name").get<std::string>();
    const json& params = doc.at("params");
    p.params.n = params.at("n").get<std::int64_t>();
    p.params.m = params.at("m").get<std::int64_t>();
    p.params.mu_x = params.at("mu_x").get<double>();
    p.params.sigma2_x = params.at("sigma2_x").get<double>();
    p.params.mu_eps = params.at("mu_eps").get<double>();
    p.params.alpha = BlomConstant(params.at("alpha").get<double>());
    for (const json& c : doc.at("noise_grid")) {
        p.noise_grid.push_back({c.at("sigma2_1").get<double>(), c.at("sigma2_2").get<double>()});
    }
    p.m_grid = doc.at("m_grid").get<std::vector<std::int64_t>>();
    return p;
}

inline json to_json(const AnalyticReport& r) {
    return json{{"e_v_before", r.e_v_before},
                {"e_v_after", r.e_v_after},
                {"e_d", r.e_d},
                {"var_v_before", r.var_v_before},
                {"var_v_after", r.var_v_after},
                {"var_d_upper_bound", r.var_d_upper_bound},
                {"relative_gain", r.relative_gain ? json(*r.relative_gain) : json(nullptr)},
                {"sharpe_lower_bound", r.sharpe_lower_bound}};
}

inline json to_json(const BootstrapSummary& b) {
    return json{{"statistic", std::string(to_string(b.statistic))},
                {"point", b.point},
                {"lower", b.lower},
                {"upper", b.upper},
                {"confidence", b.confidence},
                {"resamples", b.resamples}};
}

inline json to_json(const CoverageReport& r) {
    json quantities = json::object();
    for (std::size_t k = 0; k < kQuantityCount; ++k) {
        const auto q = static_cast<Quantity>(k);
        const CoverageTally& t = r[q];
        quantities[std::string(to_string(q))] = json{{"hits", t.hits},
                                                     {"misses_below", t.misses_below},
                                                     {"misses_above", t.misses_above},
                                                     {"hit_rate", r.hit_rate(q)}};
    }
    return json{{"runs", r.runs},
                {"cycles", r.cycles},
                {"resamples", r.resamples},
                {"confidence", r.confidence},
                {"quantities", quantities}};
}

/// Shortest round-trip decimal form; independent of the C locale.
inline std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) {
        throw std::runtime_error("format_number: conversion failed");
    }
    return std::string(buf.data(), end);
}

/// Lower-case hex SHA-256 of `bytes`.
inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256: digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

/// Digest of the canonical form: keys sorted, no whitespace.
inline std::string config_digest(const json& config) { return sha256_hex(config.dump()); }

}  // namespace emvalue
