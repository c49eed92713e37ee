// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lorentz/collision.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/stats.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

/// Two-leg polyline [x1,x2] u [x2,x3] thickened by eps (a "twisted tube").
template <int d>
struct TubeSpec {
    std::array<Vec<d>, 3> waypoints;
    double eps = 0.0;

    void validate() const {
        if (!(eps > 0.0)) throw std::invalid_argument("tube eps must be positive");
        if (waypoints[0] == waypoints[1] || waypoints[1] == waypoints[2] ||
            waypoints[0] == waypoints[2])
            throw std::invalid_argument("tube waypoints must be pairwise distinct");
    }
};

namespace detail {
inline constexpr std::uint64_t kTagTube = 7;
inline constexpr std::uint64_t kTagColinear = 8;
}  // namespace detail

/// Monte Carlo volume of the tube: uniform points in the exact bounding box,
/// membership by exact distance-to-segment tests, so the only error is
/// binomial sampling noise.
template <int d>
EstimateWithCI tube_volume_mc(const TubeSpec<d>& spec, std::int64_t n_mc,
                              std::uint64_t seed = 0x7BEULL, int threads = 1) {
    spec.validate();
    if (n_mc < 1000) throw std::invalid_argument("tube volume needs at least 1e3 samples");

    Vec<d> lo = spec.waypoints[0], hi = spec.waypoints[0];
    for (const auto& w : spec.waypoints)
        for (int k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], w[k]);
            hi[k] = std::max(hi[k], w[k]);
        }
    double box_vol = 1.0;
    for (int k = 0; k < d; ++k) {
        lo[k] -= spec.eps;
        hi[k] += spec.eps;
        box_vol *= hi[k] - lo[k];
    }

    auto blocks = parallel_blocks<std::uint64_t>(
        static_cast<std::uint64_t>(n_mc), threads,
        [&](std::uint64_t, std::uint64_t b_lo, std::uint64_t b_hi) {
            std::uint64_t hits = 0;
            for (std::uint64_t i = b_lo; i < b_hi; ++i) {
                Stream st(stream_key(seed, detail::kTagTube, i));
                Vec<d> p;
                for (int k = 0; k < d; ++k) p[k] = st.uniform(lo[k], hi[k]);
                const bool inside =
                    point_segment_distance(p, spec.waypoints[0], spec.waypoints[1]) <= spec.eps ||
                    point_segment_distance(p, spec.waypoints[1], spec.waypoints[2]) <= spec.eps;
                hits += inside ? 1 : 0;
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto h : blocks) hits += h;

    EstimateWithCI est = binomial_rate(hits, static_cast<std::uint64_t>(n_mc));
    est.mean *= box_vol;
    est.std_error *= box_vol;
    est.ci95_halfwidth *= box_vol;
    return est;
}

/// Closed-form volume of a straight tube of axis length L and radius eps:
/// rectangle/cylinder plus the two end caps (one full ball).
template <int d>
double straight_tube_volume(double L, double eps) {
    const double pi = 3.14159265358979323846;
    if constexpr (d == 2) return 2.0 * eps * L + pi * eps * eps;
    else return pi * eps * eps * L + (4.0 / 3.0) * pi * eps * eps * eps;
}

struct TubeSweepRow {
    double angle = 0.0;  // bend at the middle waypoint; 0 = aligned
    EstimateWithCI volume;
};

struct TubeSweepReport {
    std::vector<TubeSweepRow> rows;
    double collinear_closed_form = 0.0;
    bool aligned_maximal = true;       // row 0 >= every other row within 4 sigma
    double worst_violation_sigmas = 0.0;
    bool closed_form_matched = true;   // row 0 vs closed form within 4 sigma
};

/// Bend-angle sweep at fixed leg lengths: checks that the aligned tube has
/// the maximal volume (up to MC noise) and that the aligned volume matches
/// the closed form.
template <int d>
TubeSweepReport verify_tube_lemma(double L1, double L2, double eps, int n_angles,
                                  std::int64_t n_mc, std::uint64_t seed = 0x7BE2ULL,
                                  int threads = 1) {
    if (!(L1 > 0.0) || !(L2 > 0.0) || !(eps > 0.0))
        throw std::invalid_argument("tube lengths and eps must be positive");
    if (n_angles < 2) throw std::invalid_argument("need at least 2 sweep angles");

    const double pi = 3.14159265358979323846;
    TubeSweepReport rep;
    for (int a = 0; a < n_angles; ++a) {
        const double angle = pi * a / (n_angles - 1);
        TubeSpec<d> spec;
        spec.eps = eps;
        spec.waypoints[0] = Vec<d>{};
        Vec<d> x2{};
        x2[0] = L1;
        spec.waypoints[1] = x2;
        Vec<d> x3 = x2;
        x3[0] += L2 * std::cos(angle);
        x3[1] += L2 * std::sin(angle);
        spec.waypoints[2] = x3;
        TubeSweepRow row;
        row.angle = angle;
        row.volume = tube_volume_mc(spec, n_mc, stream_key(seed, 0x5eed, a), threads);
        rep.rows.push_back(row);
    }

    rep.collinear_closed_form = straight_tube_volume<d>(L1 + L2, eps);
    const auto& aligned = rep.rows.front().volume;
    for (std::size_t a = 1; a < rep.rows.size(); ++a) {
        const auto& other = rep.rows[a].volume;
        const double sigma = aligned.std_error + other.std_error;
        const double excess = other.mean - aligned.mean;
        if (sigma > 0.0)
            rep.worst_violation_sigmas = std::max(rep.worst_violation_sigmas, excess / sigma);
        if (excess > 4.0 * sigma) rep.aligned_maximal = false;
    }
    rep.closed_form_matched = std::abs(aligned.mean - rep.collinear_closed_form) <=
                              4.0 * std::max(aligned.std_error, 1e-300);
    return rep;
}

/// Scalar product between the two scattered directions in the appendix
/// coordinates: theta0 the (v, sigma) angle, theta the (v, omega) angle with
/// sgn(sin theta) carrying the in-plane side of omega, u2 the squared
/// out-of-plane component of omega. Returns (v'_omega/|.|) . (v'_sigma/|.|).
double appendix_f(double theta0, double theta, double u2, double r);

/// The in-plane angle theta1 at which the coplanar scalar product reaches -1.
double appendix_theta1(double theta0, double r);

/// Measure of the "almost colinear after scattering" set: the omega-measure
/// of {1 - |(v'/|v'|) . p| <= delta}, estimated by uniform MC on the sphere
/// and scaled by |S^{d-1}|.
template <int d>
EstimateWithCI colinearity_pathological_measure(const Vec<d>& v, const Vec<d>& p, double delta,
                                                Restitution r, std::int64_t n_mc,
                                                std::uint64_t seed = 0xC011ULL,
                                                int threads = 1) {
    if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("delta must be in (0,1]");
    if (norm2(v) == 0.0) throw std::invalid_argument("zero velocity");
    if (std::abs(norm2(p) - 1.0) > 1e-9) throw std::invalid_argument("p must be a unit vector");
    if (n_mc < 2) throw std::invalid_argument("need at least 2 samples");

    auto blocks = parallel_blocks<std::uint64_t>(
        static_cast<std::uint64_t>(n_mc), threads,
        [&](std::uint64_t, std::uint64_t b_lo, std::uint64_t b_hi) {
            std::uint64_t hits = 0;
            for (std::uint64_t i = b_lo; i < b_hi; ++i) {
                Stream st(stream_key(seed, detail::kTagColinear, i));
                const Vec<d> omega = sample_unit_sphere<d>(st);
                const Vec<d> vp = scatter(v, omega, r);
                // |v'| >= r |v| > 0: the normalization below is always safe.
                const double align = std::abs(dot(vp, p)) / norm(vp);
                hits += (1.0 - align <= delta) ? 1 : 0;
            }
            return hits;
        });
    std::uint64_t hits = 0;
    for (auto h : blocks) hits += h;

    const double surf = d == 2 ? 6.283185307179586476925287 : 2.0 * 6.283185307179586476925287;
    EstimateWithCI est = binomial_rate(hits, static_cast<std::uint64_t>(n_mc));
    est.mean *= surf;
    est.std_error *= surf;
    est.ci95_halfwidth *= surf;
    return est;
}

}  // namespace lorentz
