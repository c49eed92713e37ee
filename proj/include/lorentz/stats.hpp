// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>

namespace lorentz {

/// Monte Carlo estimate with its standard error and 95% half-width.
struct EstimateWithCI {
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t n = 0;
    double ci95_halfwidth = 0.0;
};

/// Compensated (Kahan) scalar accumulator. Used everywhere sums feed into
/// reproducibility-sensitive output: the compensation makes the result a
/// deterministic function of the addition order, and the fixed-block
/// reduction scheme pins that order independently of thread scheduling.
struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }

    double value() const { return sum; }
};

/// First/second moment accumulator with deterministic merge.
struct MomentAccumulator {
    KahanSum s1, s2;
    std::uint64_t n = 0;

    void add(double x) {
        s1.add(x);
        s2.add(x * x);
        ++n;
    }

    /// Merge must be applied in a fixed order (block index order) to keep
    /// results bit-identical across worker counts.
    void merge(const MomentAccumulator& o) {
        s1.add(o.s1.sum);
        s1.add(-o.s1.comp);
        s2.add(o.s2.sum);
        s2.add(-o.s2.comp);
        n += o.n;
    }

    EstimateWithCI estimate() const {
        EstimateWithCI e;
        e.n = n;
        if (n == 0) return e;
        const double mean = s1.value() / static_cast<double>(n);
        e.mean = mean;
        if (n >= 2) {
            const double ex2 = s2.value() / static_cast<double>(n);
            double var = (ex2 - mean * mean) * (static_cast<double>(n) / static_cast<double>(n - 1));
            if (var < 0.0) var = 0.0;
            e.std_error = std::sqrt(var / static_cast<double>(n));
        }
        e.ci95_halfwidth = 1.96 * e.std_error;
        return e;
    }
};

/// Two-sided binomial rate with normal-approximation CI.
inline EstimateWithCI binomial_rate(std::uint64_t hits, std::uint64_t n) {
    EstimateWithCI e;
    e.n = n;
    if (n == 0) return e;
    const double p = static_cast<double>(hits) / static_cast<double>(n);
    e.mean = p;
    e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    e.ci95_halfwidth = 1.96 * e.std_error;
    return e;
}

}  // namespace lorentz
