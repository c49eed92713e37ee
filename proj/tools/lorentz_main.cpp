// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lorentz/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"lorentz — inelastic Lorentz gas experiments"};
    app.footer("Outputs: <output_path>/results.csv, summary.json, manifest.json");

    std::string experiment;
    std::string config_path;
    std::string check_suite;
    std::string output_path;
    std::uint64_t seed = 0;
    int threads = 0;
    std::vector<std::string> overrides;

    app.add_option("experiment", experiment,
                   "one of: simulate, adjoint, converge, haff, lemmas, compare")
        ->required();
    app.add_option("--config", config_path, "flat key = value config file");
    auto* seed_opt = app.add_option("--seed", seed, "master RNG seed (overrides config)");
    auto* threads_opt =
        app.add_option("--threads", threads, "worker count (overrides config; 0 = auto)");
    auto* check_opt =
        app.add_option("--check", check_suite, "run the named check suite and exit");
    auto* out_opt = app.add_option("--output", output_path, "output directory (overrides config)");
    app.add_option("--set", overrides, "additional key=value config overrides");

    CLI11_PARSE(app, argc, argv);

    try {
        lorentz::ExperimentConfig cfg;
        if (!config_path.empty()) cfg = lorentz::ExperimentConfig::from_file(config_path);
        cfg.experiment = lorentz::experiment_from_string(experiment);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("--set expects key=value, got: " + kv);
            cfg.apply(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (*seed_opt) cfg.seed = seed;
        if (*threads_opt) cfg.threads = threads;
        if (*out_opt) cfg.output_path = output_path;
        if (*check_opt) cfg.check_suite = check_suite;

        if (!cfg.check_suite.empty()) {
            lorentz::CheckOptions copt;
            copt.seed = cfg.seed;
            copt.threads = cfg.threads;
            const auto rep = lorentz::check_mode(cfg, copt);
            std::printf("suite %s\n", rep.suite.c_str());
            for (const auto& line : rep.lines)
                std::printf("%s %s: %s\n", line.passed ? "PASS" : "FAIL", line.name.c_str(),
                            line.detail.c_str());
            return rep.all_passed() ? 0 : 1;
        }
        return lorentz::run(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
