// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lorentz/collision.hpp"
#include "lorentz/field.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

template <int d>
struct CollisionEvent {
    double time = 0.0;
    int scatterer_index = -1;
    Vec<d> omega{};   // unit outward normal at contact
    Vec<d> v_pre{};   // velocity before reflection (v_pre . omega <= 0)
    Vec<d> v_post{};  // scatter(v_pre, omega, r)
};

struct TrajectoryFlags {
    bool frozen_overlap = false;         // started inside a scatterer; identity flow
    bool collapse_resolved = false;      // reflections accumulate; endpoint pinned exactly
    bool collapse_guard_tripped = false; // max_events exceeded or a gap under min_gap
    bool simultaneous_collision = false; // two first-hits within 1e-12 * t
    bool recollision_detected = false;   // some scatterer hit more than once
    bool interference_detected = false;  // tripwire: a hit scatterer touches an
                                         // earlier non-adjacent leg, which exact
                                         // arithmetic excludes (see evolve)

    bool any() const {
        return frozen_overlap || collapse_resolved || collapse_guard_tripped ||
               simultaneous_collision || recollision_detected || interference_detected;
    }
};

/// Runtime guards. A pair of mutually overlapping scatterers forms a narrow
/// wedge that can capture an inelastic particle: reflection times accumulate
/// while the speed decays geometrically. Such captures are completed exactly
/// by the displacement-budget rule (collapse_resolved); the guards exist so
/// that anything else terminates and is reported as data instead of hanging.
struct Guards {
    std::int64_t max_events = 100000;
    double min_gap = 0.0;  // 0 disables the minimum inter-collision gap check
};

template <int d>
struct Trajectory {
    Vec<d> x0{}, v0{};
    Vec<d> x_final{}, v_final{};
    double elapsed = 0.0;
    std::vector<CollisionEvent<d>> events;
    std::vector<double> free_flight_gaps;  // differences of consecutive event times
    TrajectoryFlags flags;
};

template <int d>
void finalize_flags(Trajectory<d>& traj, const ScattererField<d>& field, double eps);

/// Relative tolerance for coincident hit times, scaled by the horizon t.
inline constexpr double kSimultaneityTol = 1e-12;

/// Tolerance used to exclude the just-hit scatterer immediately after a
/// reflection (the particle sits on its boundary to within roundoff).
inline constexpr double kRehitTol = 1e-12;

/// Displacement budget, in units of eps, below which a trajectory is complete:
/// speeds never increase under inelastic reflection, so |v| * (t - now) bounds
/// every future excursion from the current contact point.
inline constexpr double kCollapseBudget = 1e-12;

/// Event-driven forward flow: free flight between exact first-hit queries
/// against every scatterer, inelastic reflection at each contact, up to time
/// t or until a guard trips. Pure function of its inputs.
///
/// Flag semantics:
///  - frozen_overlap: x0 starts within eps of a center; per the generalized
///    flow, the state stays (x0, v0) for all time and no events are recorded.
///  - simultaneous_collision: two distinct scatterers' first-hit times agree
///    within 1e-12 * t; the lower index wins.
///  - recollision_detected: a scatterer index appears twice in the event list.
///  - interference_detected: some event's scatterer ball touches an earlier
///    free-flight leg it was not an endpoint of. A ball reachable from a leg
///    would have ended that leg, so with exact arithmetic this cannot happen
///    (apart from exact first-hit ties, which are already flagged as
///    simultaneous); the post-hoc check is kept as a numerical tripwire and
///    its rate should be zero.
///  - collapse_resolved: the remaining displacement budget |v| * (t - now)
///    fell below kCollapseBudget * eps, so the state at time t equals the
///    current contact point to within that budget even if reflection times
///    accumulate; the trajectory is completed exactly with that endpoint.
///  - collapse_guard_tripped: guards.max_events exceeded (the trajectory is
///    returned with the state at the last resolved event — never an
///    exception), or an inter-collision gap fell below guards.min_gap.
template <int d>
Trajectory<d> evolve(const Vec<d>& x0, const Vec<d>& v0, const ScattererField<d>& field,
                     double t, const Guards& guards = {}) {
    if (t < 0.0) throw std::invalid_argument("negative time");
    const double eps = field.params.eps;
    const Restitution r = field.params.restitution();

    Trajectory<d> traj;
    traj.x0 = x0;
    traj.v0 = v0;
    traj.elapsed = t;

    if (initial_overlap(field, x0)) {
        traj.flags.frozen_overlap = true;
        traj.x_final = x0;
        traj.v_final = v0;
        return traj;
    }

    Vec<d> x = x0;
    Vec<d> v = v0;
    double now = 0.0;
    int last_hit = -1;
    const double tie_tol = kSimultaneityTol * t;
    const int n = static_cast<int>(field.centers.size());

    while (true) {
        if (norm2(v) == 0.0) break;  // at rest: nothing can be reached

        // Track the two earliest hits so that a tie of the minimum can be
        // recognized and resolved toward the lower scatterer index.
        int best = -1, runner = -1;
        double s_best = std::numeric_limits<double>::infinity();
        double s_runner = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const auto s = detail::first_hit_unchecked(x, v, field.centers[static_cast<std::size_t>(i)], eps);
            if (!s) continue;
            if (i == last_hit && *s < kRehitTol * t) continue;  // boundary re-detection
            if (*s < s_best) {
                s_runner = s_best;
                runner = best;
                s_best = *s;
                best = i;
            } else if (*s < s_runner) {
                s_runner = *s;
                runner = i;
            }
        }
        if (runner >= 0 && s_runner - s_best <= tie_tol) {
            traj.flags.simultaneous_collision = true;
            if (runner < best) {
                best = runner;
                s_best = s_runner;
            }
        }

        if (best < 0 || now + s_best > t) break;

        now += s_best;
        x += s_best * v;

        CollisionEvent<d> ev;
        ev.time = now;
        ev.scatterer_index = best;
        ev.omega = outward_normal_at_hit(x, field.centers[static_cast<std::size_t>(best)], eps);
        ev.v_pre = v;
        ev.v_post = scatter(v, ev.omega, r);
        v = ev.v_post;
        last_hit = best;

        if (!traj.events.empty()) {
            const double gap = ev.time - traj.events.back().time;
            traj.free_flight_gaps.push_back(gap);
            if (guards.min_gap > 0.0 && gap < guards.min_gap) {
                traj.events.push_back(ev);
                traj.flags.collapse_guard_tripped = true;
                traj.x_final = x;
                traj.v_final = v;
                traj.elapsed = now;
                finalize_flags(traj, field, eps);
                return traj;
            }
        }
        traj.events.push_back(ev);

        if (norm(v) * (t - now) <= kCollapseBudget * eps) {
            traj.flags.collapse_resolved = true;
            traj.x_final = x;
            traj.v_final = v;
            traj.elapsed = t;
            finalize_flags(traj, field, eps);
            return traj;
        }

        if (static_cast<std::int64_t>(traj.events.size()) >= guards.max_events) {
            traj.flags.collapse_guard_tripped = true;
            traj.x_final = x;
            traj.v_final = v;
            traj.elapsed = now;
            finalize_flags(traj, field, eps);
            return traj;
        }
    }

    traj.x_final = x + (t - now) * v;
    traj.v_final = v;
    finalize_flags(traj, field, eps);
    return traj;
}

/// Post-hoc geometric diagnostics on a finished trajectory: recollisions
/// (repeated scatterer index) and interference (an event's scatterer ball
/// intersecting an earlier free-flight leg that is not adjacent to one of
/// that scatterer's own contacts).
template <int d>
void finalize_flags(Trajectory<d>& traj, const ScattererField<d>& field, double eps) {
    const auto& evs = traj.events;
    const std::size_t k = evs.size();
    if (k < 2) return;

    for (std::size_t i = 0; i + 1 < k && !traj.flags.recollision_detected; ++i)
        for (std::size_t j = i + 1; j < k; ++j)
            if (evs[i].scatterer_index == evs[j].scatterer_index) {
                traj.flags.recollision_detected = true;
                break;
            }

    // Leg l runs from the position of event l-1 (or the start) to event l.
    std::vector<Vec<d>> pts;
    pts.reserve(k + 1);
    pts.push_back(traj.x0);
    {
        Vec<d> x = traj.x0;
        double prev_t = 0.0;
        Vec<d> v = traj.v0;
        for (const auto& ev : evs) {
            x += (ev.time - prev_t) * v;
            prev_t = ev.time;
            v = ev.v_post;
            pts.push_back(x);
        }
    }

    for (std::size_t j = 1; j < k && !traj.flags.interference_detected; ++j) {
        const int sj = evs[j].scatterer_index;
        const Vec<d>& c = field.centers[static_cast<std::size_t>(sj)];
        for (std::size_t leg = 1; leg <= j; ++leg) {
            // pts[leg-1] -> pts[leg] is the free flight into event leg-1.
            const std::size_t end_event = leg - 1;
            const bool adjacent =
                evs[end_event].scatterer_index == sj ||
                (end_event > 0 && evs[end_event - 1].scatterer_index == sj);
            if (adjacent) continue;
            if (point_segment_distance(c, pts[leg - 1], pts[leg]) <= eps) {
                traj.flags.interference_detected = true;
                break;
            }
        }
    }
}

/// Aggregate statistics of repeated evolve calls with freshly sampled fields.
struct CountDistribution {
    std::vector<std::uint64_t> histogram;  // histogram[k] = #seeds with k events
    std::uint64_t n_seeds = 0;
    double mean_count = 0.0;
    double mean_speed_pathlen = 0.0;  // average of integral |v(s)| ds over seeds
    std::uint64_t frozen = 0;
    std::uint64_t resolved = 0;
    std::uint64_t collapse = 0;
    std::uint64_t simultaneous = 0;
    std::uint64_t recollision = 0;
    std::uint64_t interference = 0;
    std::vector<double> pooled_gaps;
};

/// Summary of pooled inter-collision gaps.
struct GapSummary {
    std::uint64_t n = 0;
    double min = 0.0, q05 = 0.0, median = 0.0, q95 = 0.0, max = 0.0;
};

inline std::optional<GapSummary> min_gap_statistics(std::vector<double> gaps) {
    if (gaps.empty()) return std::nullopt;
    std::sort(gaps.begin(), gaps.end());
    const auto q = [&](double p) {
        const double idx = p * static_cast<double>(gaps.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(idx);
        const std::size_t hi = std::min(lo + 1, gaps.size() - 1);
        const double w = idx - static_cast<double>(lo);
        return (1.0 - w) * gaps[lo] + w * gaps[hi];
    };
    GapSummary s;
    s.n = gaps.size();
    s.min = gaps.front();
    s.q05 = q(0.05);
    s.median = q(0.5);
    s.q95 = q(0.95);
    s.max = gaps.back();
    return s;
}

template <int d>
std::optional<GapSummary> min_gap_statistics(const std::vector<Trajectory<d>>& trajectories) {
    std::vector<double> gaps;
    for (const auto& tr : trajectories)
        gaps.insert(gaps.end(), tr.free_flight_gaps.begin(), tr.free_flight_gaps.end());
    return min_gap_statistics(std::move(gaps));
}

/// Integral of |v(s)| ds along a trajectory (piecewise constant speeds).
template <int d>
inline double speed_pathlen(const Trajectory<d>& traj) {
    double acc = 0.0;
    double prev_t = 0.0;
    double speed = norm(traj.v0);
    for (const auto& ev : traj.events) {
        acc += (ev.time - prev_t) * speed;
        prev_t = ev.time;
        speed = norm(ev.v_post);
    }
    acc += (traj.elapsed - prev_t) * speed;
    return acc;
}

/// Runs evolve over n_seeds freshly sampled fields with fixed (x0, v0, t) and
/// aggregates counts, gaps, and flag frequencies. Seeds are derived from
/// base_seed, one stream per seed index.
template <int d>
CountDistribution collision_count_distribution(const KineticParams& params, const Vec<d>& x0,
                                               const Vec<d>& v0, double t, std::uint64_t n_seeds,
                                               std::uint64_t base_seed, const Guards& guards = {}) {
    const auto [center, radius] = dynamical_ball(x0, v0, t, params.eps);
    CountDistribution cd;
    cd.n_seeds = n_seeds;
    double count_sum = 0.0, pathlen_sum = 0.0;
    for (std::uint64_t i = 0; i < n_seeds; ++i) {
        const auto field = sample_field<d>(center, radius, params, stream_key(base_seed, 1, i));
        const auto traj = evolve(x0, v0, field, t, guards);
        const std::size_t k = traj.events.size();
        if (cd.histogram.size() <= k) cd.histogram.resize(k + 1, 0);
        ++cd.histogram[k];
        count_sum += static_cast<double>(k);
        pathlen_sum += speed_pathlen(traj);
        cd.frozen += traj.flags.frozen_overlap;
        cd.resolved += traj.flags.collapse_resolved;
        cd.collapse += traj.flags.collapse_guard_tripped;
        cd.simultaneous += traj.flags.simultaneous_collision;
        cd.recollision += traj.flags.recollision_detected;
        cd.interference += traj.flags.interference_detected;
        cd.pooled_gaps.insert(cd.pooled_gaps.end(), traj.free_flight_gaps.begin(),
                              traj.free_flight_gaps.end());
    }
    const double inv = n_seeds ? 1.0 / static_cast<double>(n_seeds) : 0.0;
    cd.mean_count = count_sum * inv;
    cd.mean_speed_pathlen = pathlen_sum * inv;
    return cd;
}

}  // namespace lorentz
