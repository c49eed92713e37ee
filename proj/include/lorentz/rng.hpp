// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cstdint>
#include <cmath>
#include <stdexcept>

#include "lorentz/vec.hpp"

namespace lorentz {

namespace detail {

/// SplitMix64 output function (Steele/Lea/Flood finalizer). Used as a
/// counter-based generator: the i-th output of a stream is mix(key + i*GAMMA),
/// so any sample index can be generated without sequencing through the
/// stream. This is what makes worker scheduling irrelevant to the results.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Derives a stream key from a user seed plus up to three role/index
/// coordinates (e.g. (seed, purpose, seed_index)). Distinct coordinates give
/// statistically independent streams.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a = 0,
                                std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t k = detail::mix64(seed);
    k = detail::mix64(k ^ (a * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL));
    k = detail::mix64(k ^ (b * 0xaf251af3b0f025b5ULL + 0x9e6c63d0a9564b8fULL));
    k = detail::mix64(k ^ (c * 0xb564ef22ec7aece5ULL + 0x1d8e4e27c47d124fULL));
    return k;
}

/// Counter-based random stream. Cheap to construct, cheap to copy; all state
/// is (key, counter). Draw order within one stream is sequential, but streams
/// themselves can be created per (seed, task) pair in any order.
class Stream {
  public:
    explicit Stream(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() { return detail::mix64(key_ + (++ctr_) * detail::kGamma); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Standard normal via Box–Muller. Draws two uniforms per call; no state
    /// is cached so the draw count per call is fixed.
    double normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Poisson(lambda), exact for any lambda. Uses Knuth's product method for
    /// small means; larger means are decomposed additively into independent
    /// Poisson(30) blocks (infinite divisibility), which avoids the exp(-l)
    /// underflow without resorting to approximate rejection schemes.
    std::uint64_t poisson(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("poisson: negative mean");
        std::uint64_t n = 0;
        while (lambda > 30.0) {
            n += poisson_knuth(30.0);
            lambda -= 30.0;
        }
        return n + poisson_knuth(lambda);
    }

    std::uint64_t counter() const { return ctr_; }

  private:
    std::uint64_t poisson_knuth(double lambda) {
        const double limit = std::exp(-lambda);
        double prod = 1.0;
        std::uint64_t n = 0;
        do {
            prod *= uniform();
            if (prod < limit) return n;
            ++n;
        } while (true);
    }

    std::uint64_t key_;
    std::uint64_t ctr_ = 0;
};

}  // namespace lorentz
