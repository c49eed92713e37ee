// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lorentz/kinetic.hpp"

namespace lorentz {

inline constexpr const char* kLibraryVersion = "0.1.0";

enum class Experiment { simulate, adjoint, converge, haff, lemmas, compare };

std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& name);  // throws on unknown name

/// Flat experiment configuration. Parsed from a `key = value` text file
/// (one pair per line, `#` comments) and overridable key-by-key from the
/// command line; there is deliberately no nested config language.
struct ExperimentConfig {
    Experiment experiment = Experiment::simulate;
    int d = 2;
    double r = 1.0;
    double eps = 0.1;                        // single-radius experiments
    std::vector<double> eps_grid;            // converge: strictly decreasing
    double t = 1.0;                          // single-horizon experiments
    std::vector<double> t_grid;              // haff: nondecreasing sample times
    std::array<double, 3> x0{{0.0, 0.0, 0.0}};
    std::array<double, 3> v0{{1.0, 0.0, 0.0}};
    std::int64_t n_seeds = 1000;
    std::uint64_t seed = 0xC0FFEEULL;
    int threads = 1;
    std::string output_path = "out";
    double mu = 0.0;                         // 0 = derive from eps (scaling-locked)
    bool bg_locked = true;
    SeriesConfig series;

    // Observable plumbing for adjoint / converge / compare.
    std::string phi = "bump";                // "constant" | "bump"
    std::array<double, 3> bump_center{{0.0, 0.0, 0.0}};
    bool bump_center_set = false;            // unset: centered at x0 + t * v0
    double bump_width = 0.5;

    std::string check_suite;                 // non-empty selects check mode

    /// Parses the flat key = value file; throws on unreadable file, unknown
    /// key, or malformed value.
    static ExperimentConfig from_file(const std::string& path);

    /// Applies a single `key=value` override (same keys as the file).
    void apply(const std::string& key, const std::string& value);

    /// Flat echo of every field for the run manifest, in stable key order.
    std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Returns every violated invariant as a human-readable message; an empty
/// list means the config is runnable for its experiment.
std::vector<std::string> validate(const ExperimentConfig& cfg);

/// Dispatches to the experiment pipeline and persists results.csv,
/// summary.json, and manifest.json under cfg.output_path. Returns the process
/// exit status: 0 on success, 2 on validation failure, 1 on runtime error.
int run(const ExperimentConfig& cfg);

/// One named pass/fail line of a check suite.
struct CheckLine {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct CheckReport {
    std::string suite;
    std::vector<CheckLine> lines;

    bool all_passed() const {
        for (const auto& l : lines)
            if (!l.passed) return false;
        return !lines.empty();
    }
};

/// Test seam for the built-in check suites. corrupt_scatter_sign flips the
/// sign of the normal impulse in the algebraic scattering checks, so a test
/// can confirm the suite actually fails on a broken collision law.
struct CheckOptions {
    bool corrupt_scatter_sign = false;
    std::uint64_t seed = 0xC0FFEEULL;
    int threads = 1;
};

/// Runs the named built-in suite ("elastic-conservation", "mass-conservation")
/// against its stored thresholds; throws std::invalid_argument on an unknown
/// suite name.
CheckReport check_mode(const ExperimentConfig& cfg, const CheckOptions& opt = {});

}  // namespace lorentz
