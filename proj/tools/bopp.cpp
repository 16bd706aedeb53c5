// bopp <subcommand> --config <path> [--out <dir>] [--threads k] [--seed s]
// Exit codes: 0 all thresholds pass, 1 configuration or model error, 2 threshold failure.
#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "bopp/experiments.hpp"

namespace {

int run(const std::string& sub, const std::string& config, const std::string& out, int threads, long long seed) {
    using namespace bopp;
    try {
        RunConfig cfg = load_config(config);
        if (!cfg.experiment.empty() && cfg.experiment != sub)
            throw ConfigError(fmt::format("experiment.name: config is for '{}', not '{}'", cfg.experiment, sub));
        cfg.experiment = sub;
        if (threads > 0) cfg.threads = threads;
        if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
        if (!out.empty()) cfg.out_dir = out;
        if (const char* env = std::getenv("BOPP_OUT"); env && *env) cfg.out_dir = env;

        const auto t0 = std::chrono::steady_clock::now();
        const ExperimentResult r = run_experiment(cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& t : r.tables) write_csv(cfg.out_dir, t);
        for (const auto& n : r.notes) fmt::print("  {}\n", n);
        for (const auto& c : r.checks) fmt::print("  {}\n", c.describe());
        const auto fails = r.failures();
        fmt::print("{}: {} ({} checks, {} failed, {:.1f}s, CSV in {})\n", sub, fails.empty() ? "PASS" : "FAIL",
                   r.checks.size(), fails.size(), secs, cfg.out_dir);
        for (const auto& c : fails) fmt::print(stderr, "threshold violated: {}\n", c.describe());
        return fails.empty() ? 0 : 2;
    } catch (const ConfigError& e) {
        fmt::print(stderr, "configuration error: {}\n", e.what());
    } catch (const ModelError& e) {
        fmt::print(stderr, "model error: {}\n", e.what());
    } catch (const std::invalid_argument& e) {
        fmt::print(stderr, "invalid input: {}\n", e.what());
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Born-Oppenheimer reduction laboratory: h-scaling experiments"};
    app.require_subcommand(1);
    std::string config, out;
    int threads = 0;
    long long seed = -1;
    int code = 0;
    for (const auto& [name, fn] : bopp::experiment_catalog()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config, "config file (INI)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (BOPP_OUT overrides)");
        sub->add_option("--threads", threads, "worker threads over the h sweep")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "seed for randomized symbols")->check(CLI::NonNegativeNumber);
        sub->callback([&, name = name] { code = run(name, config, out, threads, seed); });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    return code;
}
