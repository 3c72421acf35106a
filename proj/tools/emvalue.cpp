// emvalue: value of reducing estimation noise when prioritizing propositions.
//
// Exit codes: 0 ok, 1 math-domain error, 2 configuration error, 3 I/O error.

#include "emvalue/commands.hpp"
#include "emvalue/parallel.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitMath = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw emvalue::IoError("cannot open '" + path.string() + "' for writing");
    }
    out << contents;
    out.flush();
    if (!out) {
        throw emvalue::IoError("failed writing '" + path.string() + "'");
    }
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double value = 0.0;
        const char* begin = item.data();
        const char* end = item.data() + item.size();
        while (begin != end && *begin == ' ') {
            ++begin;
        }
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            throw emvalue::ConfigError("--p-grid", "cannot parse '" + item + "' as a number");
        }
        grid.push_back(value);
    }
    return grid;
}

struct Options {
    std::string scenario;
    std::string out;
    std::string format = "json";
    std::string param_space;
    std::string name;
    std::string p_grid = "0,0.25,0.5,0.75,1";
    std::optional<std::size_t> cycles;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> resamples;
    std::uint64_t seed = 1;
    bool emit_samples = false;
};

void emit(const emvalue::CommandOutput& output, const Options& opt, bool document_to_out) {
    if (opt.format == "csv" && output.files.size() == 1 && opt.out.empty()) {
        std::cout << output.files.front().contents;
        return;
    }
    if (document_to_out && !opt.out.empty()) {
        write_file(opt.out, output.document.dump(2) + "\n");
        return;
    }
    std::cout << output.document.dump(2) << "\n";
}

emvalue::ParameterSpace load_space(const Options& opt) {
    if (opt.param_space.empty()) {
        return {};
    }
    return emvalue::parse_parameter_space(emvalue::read_json_file(opt.param_space));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Value of experimentation and measurement: expected gain and risk of reducing estimation noise.\n"
                 "All rates are fractions: an uplift of 1% is written 0.01 and a noise of (0.8%)^2 as 0.008^2 = "
                 "6.4e-05.\nEMVALUE_THREADS caps the number of worker threads."};
    app.require_subcommand(1);
    Options opt;

    auto* analytic = app.add_subcommand("analytic", "Closed-form moments of V and D for a scenario");
    analytic->add_option("--scenario", opt.scenario, "Scenario JSON file")->required();
    analytic->add_option("--out", opt.out, "Write the result document here instead of stdout");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo moments and bootstrap intervals of V and D");
    simulate->add_option("--scenario", opt.scenario, "Scenario JSON file with a simulation block")->required();
    simulate->add_option("--out", opt.out, "Samples CSV path (with --emit-samples)");
    simulate->add_flag("--emit-samples", opt.emit_samples, "Write cycle,v_before,v_after,d to --out (stdout with --format csv)");
    simulate->add_option("--resamples", opt.resamples, "Bootstrap resamples (default 1000)");
    simulate->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* verify = app.add_subcommand("verify", "Bootstrap coverage of the analytic moments over random scenarios");
    verify->add_option("--runs", opt.runs, "Random scenarios (default 100)");
    verify->add_option("--cycles", opt.cycles, "Cycles per scenario (default 2000)");
    verify->add_option("--resamples", opt.resamples, "Bootstrap resamples (default 500)");
    verify->add_option("--seed", opt.seed, "Base seed");
    verify->add_option("--param-space", opt.param_space, "JSON file overriding the scenario sampler ranges");
    verify->add_option("--out", opt.out, "Write the result document here instead of stdout");

    auto* case_study = app.add_subcommand("case-study", "Plot data for the e-commerce or marketing case study");
    case_study->add_option("name", opt.name, "ecommerce or marketing")->required();
    case_study->add_option("--out", opt.out, "Output directory for the per-noise-pair CSV files")->required();
    case_study->add_option("--cycles", opt.cycles, "Cycles per row (default 1000)");
    case_study->add_option("--seed", opt.seed, "Base seed");

    auto* ratio = app.add_subcommand("ratio-experiment", "Empirical Var(D) relative to its analytic upper bound");
    ratio->add_option("--runs", opt.runs, "Random scenarios (default 100)");
    ratio->add_option("--cycles", opt.cycles, "Cycles per scenario (default 1000)");
    ratio->add_option("--resamples", opt.resamples, "Bootstrap resamples (default 500)");
    ratio->add_option("--seed", opt.seed, "Base seed");
    ratio->add_option("--param-space", opt.param_space, "JSON file overriding the scenario sampler ranges");
    ratio->add_option("--out", opt.out, "Histogram CSV path");
    ratio->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    auto* partial = app.add_subcommand("partial-sweep", "Mean and 5-95% band of D against the share p measured better");
    partial->add_option("--scenario", opt.scenario, "Scenario JSON file with a simulation block")->required();
    partial->add_option("--p-grid", opt.p_grid, "Comma-separated ascending shares in [0, 1]");
    partial->add_option("--out", opt.out, "Sweep CSV path");
    partial->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*analytic) {
            emit(emvalue::cmd_analytic(emvalue::load_scenario(opt.scenario)), opt, true);
        } else if (*simulate) {
            if (opt.emit_samples && opt.out.empty() && opt.format != "csv") {
                throw emvalue::ConfigError("--out", "required with --emit-samples unless --format csv");
            }
            const auto output = emvalue::cmd_simulate(emvalue::load_scenario(opt.scenario), opt.emit_samples,
                                                      opt.resamples.value_or(1000));
            if (opt.emit_samples && !opt.out.empty()) {
                write_file(opt.out, output.files.front().contents);
            }
            emit(output, opt, false);
        } else if (*verify) {
            const auto output = emvalue::cmd_verify(opt.runs.value_or(100), opt.cycles.value_or(2000),
                                                    opt.resamples.value_or(500), opt.seed,
                                                    load_space(opt));
            emit(output, opt, true);
        } else if (*case_study) {
            const auto output = emvalue::cmd_case_study(opt.name, opt.cycles.value_or(1000), opt.seed);
            std::error_code ec;
            std::filesystem::create_directories(opt.out, ec);
            if (ec) {
                throw emvalue::IoError("cannot create directory '" + opt.out + "': " + ec.message());
            }
            for (const auto& file : output.files) {
                write_file(std::filesystem::path(opt.out) / file.name, file.contents);
            }
            std::cout << output.document.dump(2) << "\n";
        } else if (*ratio) {
            const auto output = emvalue::cmd_ratio_experiment(
                opt.runs.value_or(100), opt.cycles.value_or(1000),
                opt.resamples.value_or(500), opt.seed, load_space(opt));
            if (!opt.out.empty()) {
                write_file(opt.out, output.files.front().contents);
            }
            emit(output, opt, false);
        } else if (*partial) {
            const auto output =
                emvalue::cmd_partial_sweep(emvalue::load_scenario(opt.scenario), parse_grid(opt.p_grid));
            if (!opt.out.empty()) {
                write_file(opt.out, output.files.front().contents);
            }
            emit(output, opt, false);
        }
    } catch (const emvalue::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const emvalue::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMath;
    }
    return 0;
}
