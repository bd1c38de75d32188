#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "adkit/harness.hpp"

namespace {

constexpr int kConfigError = 2;

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || v == 0) throw adkit::ConfigError("", "", "invalid size '" + item + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

std::vector<bool> parse_prepared(const std::string& text) {
    if (text == "both") return {true, false};
    if (text == "true") return {true};
    if (text == "false") return {false};
    throw adkit::ConfigError("", "", "--prepared must be both, true or false, got '" + text + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adkit: differentiation correctness checks and benchmarks"};
    app.require_subcommand(1);

    std::string scenarios = "all", backends, sizes, prepared = "both", out, markdown, scenario;
    std::size_t samples = 100;
    double budget_ms = 1000.0;
    double tol = -1.0;

    auto* bench = app.add_subcommand("bench", "time prepared and unprepared operator calls");
    bench->add_option("--scenarios", scenarios, "scenario names or 'all'");
    bench->add_option("--backends", backends, "backend ids, e.g. dual,tape,fd")->required();
    bench->add_option("--sizes", sizes, "comma-separated input sizes");
    bench->add_option("--prepared", prepared, "both, true or false");
    bench->add_option("--out", out, "CSV output path");
    bench->add_option("--markdown", markdown, "markdown table output path");
    bench->add_option("--samples", samples, "maximum samples per cell");
    bench->add_option("--budget-ms", budget_ms, "time budget per cell in milliseconds");
    bench->add_option("--tol", tol, "absolute tolerance override");

    auto* check = app.add_subcommand("check", "compare all operator variants with scenario references");
    check->add_option("--scenarios", scenarios, "scenario names or 'all'");
    check->add_option("--backends", backends, "backend ids")->required();
    check->add_option("--sizes", sizes, "comma-separated input sizes");
    check->add_option("--tol", tol, "absolute tolerance override");

    auto* pattern = app.add_subcommand("pattern", "write a scenario's sparsity pattern");
    pattern->add_option("--scenario", scenario, "scenario name")->required();
    pattern->add_option("--out", out, "output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    try {
        adkit::harness::SuiteConfig cfg;
        cfg.scenarios = scenarios;
        cfg.backends = backends;
        cfg.sizes = parse_sizes(sizes);
        if (tol >= 0.0) cfg.tolerance = tol;
        if (*bench) {
            cfg.prepared = parse_prepared(prepared);
            cfg.csv_path = out;
            cfg.markdown_path = markdown;
            cfg.options.max_samples = samples;
            cfg.options.budget_ms = budget_ms;
            return adkit::harness::run_suite(cfg, std::cout);
        }
        if (*check) return adkit::harness::run_checks(cfg, std::cout);
        if (*pattern) {
            const auto& s = adkit::harness::find_scenario(scenario);
            std::ofstream f(out);
            if (!f) throw adkit::ConfigError("", "", "cannot open '" + out + "' for writing");
            adkit::harness::write_scenario_pattern(f, s);
            return 0;
        }
    } catch (const adkit::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return kConfigError;
    } catch (const adkit::Error& e) {
        std::cerr << e.what() << '\n';
        return 1;
    }
    return 0;
}
