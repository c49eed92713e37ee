// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lorentz/flow.hpp"
#include "lorentz/kinetic.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/stats.hpp"

namespace lorentz {

/// Trajectory-flag counts across a seed ensemble.
struct FlagTally {
    std::uint64_t n = 0;
    std::uint64_t frozen = 0;
    std::uint64_t resolved = 0;  // accumulating reflections completed exactly
    std::uint64_t collapse = 0;  // max_events / min_gap guard trips
    std::uint64_t simultaneous = 0;
    std::uint64_t recollision = 0;
    std::uint64_t interference = 0;

    void add(const TrajectoryFlags& f) {
        ++n;
        frozen += f.frozen_overlap ? 1 : 0;
        resolved += f.collapse_resolved ? 1 : 0;
        collapse += f.collapse_guard_tripped ? 1 : 0;
        simultaneous += f.simultaneous_collision ? 1 : 0;
        recollision += f.recollision_detected ? 1 : 0;
        interference += f.interference_detected ? 1 : 0;
    }
    void merge(const FlagTally& o) {
        n += o.n;
        frozen += o.frozen;
        resolved += o.resolved;
        collapse += o.collapse;
        simultaneous += o.simultaneous;
        recollision += o.recollision;
        interference += o.interference;
    }
};

struct PhiEpsResult {
    EstimateWithCI estimate;
    FlagTally flags;
};

namespace detail {

// Stream role tags: every estimator derives its per-item keys under its own
// tag, so adding an estimator never shifts another one's random numbers.
inline constexpr std::uint64_t kTagPhiEps = 2;
inline constexpr std::uint64_t kTagEnergyInit = 3;
inline constexpr std::uint64_t kTagEnergyField = 4;
inline constexpr std::uint64_t kTagRates = 5;
inline constexpr std::uint64_t kTagConvergeRow = 6;
inline constexpr std::uint64_t kTagRatesLimit = 13;

/// Ordinary least squares y = a x + b; returns (a, b).
inline std::pair<double, double> least_squares(const std::vector<double>& xs,
                                               const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 2) return {0.0, n == 1 ? ys[0] : 0.0};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return {0.0, sy / static_cast<double>(n)};
    const double a = (n * sxy - sx * sy) / den;
    return {a, (sy - a * sx) / static_cast<double>(n)};
}

}  // namespace detail

/// Annealed Monte Carlo estimate of phi_eps(t, x0, v0): for each seed a fresh
/// Poisson field on the dynamical ball, the event-driven flow, and phi at the
/// trajectory endpoint. Whenever the event-driven flow is not globally
/// defined — the start overlaps a scatterer, or reflections accumulate in a
/// wedge — the generalized flow is the identity, so phi is taken at (x0, v0).
/// Reduction is per-block and merged in block order, so the result is a pure
/// function of (seed, n_seeds) regardless of thread count.
template <int d>
PhiEpsResult estimate_phi_eps_detailed(const Observable<d>& phi, double t, const Vec<d>& x0,
                                       const Vec<d>& v0, const KineticParams& params,
                                       std::int64_t n_seeds, std::uint64_t seed = 0xC0FFEEULL,
                                       int threads = 1, const Guards& guards = {}) {
    if (n_seeds < 2) throw std::invalid_argument("need at least 2 seeds");
    params.validate();
    if (params.d != d) throw std::invalid_argument("params dimension mismatch");
    if (!phi.f) throw std::invalid_argument("observable has no evaluator");
    const auto [center, radius] = dynamical_ball(x0, v0, t, params.eps);

    struct BlockOut {
        MomentAccumulator acc;
        FlagTally tally;
    };
    auto blocks = parallel_blocks<BlockOut>(
        static_cast<std::uint64_t>(n_seeds), threads,
        [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
            BlockOut out;
            for (std::uint64_t i = lo; i < hi; ++i) {
                const auto field = sample_field<d>(center, radius, params,
                                                   stream_key(seed, detail::kTagPhiEps, i));
                const auto traj = evolve(x0, v0, field, t, guards);
                out.tally.add(traj.flags);
                const bool identity =
                    traj.flags.collapse_resolved || traj.flags.collapse_guard_tripped;
                out.acc.add(identity ? phi.f(x0, v0) : phi.f(traj.x_final, traj.v_final));
            }
            return out;
        });

    PhiEpsResult res;
    MomentAccumulator total;
    for (const auto& b : blocks) {
        total.merge(b.acc);
        res.flags.merge(b.tally);
    }
    res.estimate = total.estimate();
    return res;
}

template <int d>
EstimateWithCI estimate_phi_eps(const Observable<d>& phi, double t, const Vec<d>& x0,
                                const Vec<d>& v0, const KineticParams& params,
                                std::int64_t n_seeds, std::uint64_t seed = 0xC0FFEEULL,
                                int threads = 1, const Guards& guards = {}) {
    return estimate_phi_eps_detailed(phi, t, x0, v0, params, n_seeds, seed, threads, guards)
        .estimate;
}

struct ConvergenceRow {
    double eps = 0.0;
    double mu = 0.0;
    EstimateWithCI I_eps;
    double I_0 = 0.0;
    double abs_gap = 0.0;
    double recollision_rate = 0.0;
    double overlap_rate = 0.0;
    bool noise_limited = false;  // ci95 exceeds the gap: excluded from the fit
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    SeriesResult series;          // the eps-independent kinetic value I_0
    double fitted_slope = 0.0;    // least-squares slope of log gap vs log eps
    double fitted_intercept = 0.0;
    double envelope_C = 0.0;      // max over included rows of gap / eps^{1/4}
    int n_excluded = 0;
};

struct ExperimentOptions {
    std::uint64_t seed = 0xC0FFEEULL;
    int threads = 1;
    Guards guards;
    SeriesConfig series;
};

/// Boltzmann-Grad convergence scan: for each radius eps in a decreasing grid
/// (intensity locked to mu = eps^{1-d}) the microscopic estimate I_eps is
/// compared against the kinetic value I_0 = psi(t, x0, v0) — Dirac initial
/// data, so I_0 is a single adjoint-series evaluation. Rows whose Monte Carlo
/// ci95 exceeds their gap are reported but excluded from the log-log rate
/// fit; the fitted slope is a consistency diagnostic, not a sharp exponent.
template <int d>
ConvergenceReport convergence_experiment(const Observable<d>& phi, double t, const Vec<d>& x0,
                                         const Vec<d>& v0, double r,
                                         const std::vector<double>& eps_grid,
                                         std::int64_t n_seeds,
                                         const ExperimentOptions& opt = {}) {
    if (eps_grid.empty()) throw std::invalid_argument("empty eps grid");
    for (std::size_t i = 0; i + 1 < eps_grid.size(); ++i)
        if (!(eps_grid[i + 1] < eps_grid[i]))
            throw std::invalid_argument("eps grid must be strictly decreasing");

    ConvergenceReport rep;
    {
        SeriesConfig scfg = opt.series;
        scfg.threads = opt.threads;
        const auto params0 = KineticParams::bg(d, r, eps_grid.front());
        rep.series = adjoint_series_psi(phi, t, x0, v0, params0, scfg);
    }

    for (std::size_t ridx = 0; ridx < eps_grid.size(); ++ridx) {
        const double eps = eps_grid[ridx];
        const auto params = KineticParams::bg(d, r, eps);
        const auto detailed = estimate_phi_eps_detailed(
            phi, t, x0, v0, params, n_seeds,
            stream_key(opt.seed, detail::kTagConvergeRow, ridx), opt.threads, opt.guards);

        ConvergenceRow row;
        row.eps = eps;
        row.mu = params.mu;
        row.I_eps = detailed.estimate;
        row.I_0 = rep.series.value;
        row.abs_gap = std::abs(detailed.estimate.mean - rep.series.value);
        const double inv_n = detailed.flags.n ? 1.0 / static_cast<double>(detailed.flags.n) : 0.0;
        row.recollision_rate = static_cast<double>(detailed.flags.recollision) * inv_n;
        row.overlap_rate = static_cast<double>(detailed.flags.frozen) * inv_n;
        row.noise_limited = row.I_eps.ci95_halfwidth > row.abs_gap;
        rep.rows.push_back(row);
    }

    std::vector<double> lx, ly;
    for (const auto& row : rep.rows) {
        if (row.noise_limited || row.abs_gap <= 0.0) {
            ++rep.n_excluded;
            continue;
        }
        lx.push_back(std::log(row.eps));
        ly.push_back(std::log(row.abs_gap));
        rep.envelope_C = std::max(rep.envelope_C, row.abs_gap / std::pow(row.eps, 0.25));
    }
    const auto [slope, intercept] = detail::least_squares(lx, ly);
    rep.fitted_slope = slope;
    rep.fitted_intercept = intercept;
    return rep;
}

struct EnergyCurve {
    std::vector<double> t_grid;
    std::vector<EstimateWithCI> energy;  // mean |v(t)|^2 across particles
    FlagTally flags;
};

/// Empirical kinetic energy of an annealed ensemble: each particle draws its
/// own initial state and its own scatterer field, then reports |v(t)|^2 at
/// every grid time (velocities are piecewise constant between events).
///
/// Starts are conditioned to be admissible: the field is redrawn (with an
/// attempt-indexed key) until the initial point is uncovered. The comparison
/// target is the kinetic solution's energy, and the kinetic equation carries
/// no mass at covered starts — an unconditioned ensemble would pin the
/// covered fraction (1 - e^{-mu |B_eps|}, which is O(eps) under the scaling
/// lock but far from negligible at fixed radius) at its initial energy
/// forever and bias the curve upward by that atom. On the rare trajectory
/// whose reflections accumulate, the generalized flow is the identity and the
/// particle keeps its initial velocity.
template <int d>
EnergyCurve ensemble_energy(const KineticParams& params,
                            const std::function<std::pair<Vec<d>, Vec<d>>(Stream&)>& f0_sampler,
                            const std::vector<double>& t_grid, std::int64_t n_particles,
                            std::uint64_t seed = 0xE4E26ULL, int threads = 1,
                            const Guards& guards = {}) {
    params.validate();
    if (params.d != d) throw std::invalid_argument("params dimension mismatch");
    if (!f0_sampler) throw std::invalid_argument("missing initial sampler");
    if (t_grid.empty()) throw std::invalid_argument("empty time grid");
    if (t_grid.front() < 0.0) throw std::invalid_argument("negative time");
    for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
        if (t_grid[i + 1] < t_grid[i])
            throw std::invalid_argument("time grid must be nondecreasing");
    if (n_particles < 2) throw std::invalid_argument("need at least 2 particles");
    const double t_max = t_grid.back();

    struct BlockOut {
        std::vector<MomentAccumulator> acc;
        FlagTally tally;
    };
    auto blocks = parallel_blocks<BlockOut>(
        static_cast<std::uint64_t>(n_particles), threads,
        [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
            BlockOut out;
            out.acc.resize(t_grid.size());
            for (std::uint64_t i = lo; i < hi; ++i) {
                Stream init(stream_key(seed, detail::kTagEnergyInit, i));
                const auto [x0, v0] = f0_sampler(init);
                const auto [center, radius] = dynamical_ball(x0, v0, t_max, params.eps);
                ScattererField<d> field;
                for (std::uint64_t attempt = 0;; ++attempt) {
                    field = sample_field<d>(
                        center, radius, params,
                        stream_key(seed, detail::kTagEnergyField, i, attempt));
                    if (!initial_overlap(field, x0) || attempt >= 64) break;
                }
                const auto traj = evolve(x0, v0, field, t_max, guards);
                out.tally.add(traj.flags);
                const bool identity =
                    traj.flags.collapse_resolved || traj.flags.collapse_guard_tripped;
                Vec<d> v_cur = traj.v0;
                std::size_t e = 0;
                for (std::size_t g = 0; g < t_grid.size(); ++g) {
                    if (!identity)
                        while (e < traj.events.size() && traj.events[e].time <= t_grid[g]) {
                            v_cur = traj.events[e].v_post;
                            ++e;
                        }
                    out.acc[g].add(norm2(v_cur));
                }
            }
            return out;
        });

    EnergyCurve curve;
    curve.t_grid = t_grid;
    std::vector<MomentAccumulator> totals(t_grid.size());
    for (const auto& b : blocks) {
        curve.flags.merge(b.tally);
        for (std::size_t g = 0; g < t_grid.size(); ++g) totals[g].merge(b.acc[g]);
    }
    curve.energy.reserve(t_grid.size());
    for (const auto& acc : totals) curve.energy.push_back(acc.estimate());
    return curve;
}

struct RateRow {
    double eps = 0.0;
    std::uint64_t n = 0;
    EstimateWithCI recollision;   // event-driven flow: some scatterer hit twice
    EstimateWithCI interference;  // jump-process parametrization: reconstructed
                                  // obstacle ball meets an earlier leg
    EstimateWithCI recollision_limit;  // jump-process parametrization: a later
                                       // leg re-enters a reconstructed ball
    std::uint64_t interference_quenched = 0;  // tripwire; geometrically
                                              // excluded for the exact flow
    std::uint64_t frozen = 0;
    std::uint64_t resolved = 0;
    std::uint64_t collapse = 0;
    std::uint64_t simultaneous = 0;
};

/// Flagged-event rates per scatterer radius, each phenomenon measured in the
/// parametrization where it occurs. Recollisions happen on the event-driven
/// flow and are tallied from its flags. An interference — an obstacle ball
/// meeting an earlier inter-collision leg — is geometrically excluded there
/// (the particle would have collided during that leg), so it is measured on
/// the limiting jump process: sample one path per seed, reconstruct each
/// obstacle center at distance eps behind its contact point, and test the
/// reconstructed balls against non-adjacent legs (limit_path_pathologies).
/// The same path serves every radius in the grid, which pairs the rows and
/// makes the two limit-side rates pointwise monotone in eps. Field and path
/// seeds depend only on (seed, row, seed index) — not on r — so elastic and
/// inelastic runs at the same seed see identical scatterer configurations and
/// identical clock/normal draws (paired comparison).
template <int d>
std::vector<RateRow> recollision_interference_rates(double r, const Vec<d>& x0, const Vec<d>& v0,
                                                    double t, std::int64_t n_seeds,
                                                    const std::vector<double>& eps_grid,
                                                    std::uint64_t seed = 0x4A7E5ULL,
                                                    int threads = 1, const Guards& guards = {}) {
    if (eps_grid.empty()) throw std::invalid_argument("empty eps grid");
    if (n_seeds < 2) throw std::invalid_argument("need at least 2 seeds");

    const std::size_t n_rows = eps_grid.size();
    std::vector<KineticParams> row_params;
    std::vector<std::uint64_t> row_seeds;
    for (std::size_t ridx = 0; ridx < n_rows; ++ridx) {
        row_params.push_back(KineticParams::bg(d, r, eps_grid[ridx]));
        row_seeds.push_back(stream_key(seed, detail::kTagRates, ridx));
    }

    struct RowTally {
        FlagTally quenched;
        std::uint64_t limit_recollision = 0;
        std::uint64_t limit_interference = 0;
    };
    auto blocks = parallel_blocks<std::vector<RowTally>>(
        static_cast<std::uint64_t>(n_seeds), threads,
        [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
            std::vector<RowTally> tallies(n_rows);
            for (std::uint64_t i = lo; i < hi; ++i) {
                Stream path_rng(stream_key(seed, detail::kTagRatesLimit, i));
                const auto path = limit_process_path<d>(x0, v0, t, Restitution(r), path_rng);
                for (std::size_t ridx = 0; ridx < n_rows; ++ridx) {
                    const auto po = limit_path_pathologies(path, eps_grid[ridx]);
                    tallies[ridx].limit_recollision += po.recollision ? 1 : 0;
                    tallies[ridx].limit_interference += po.interference ? 1 : 0;

                    const auto& params = row_params[ridx];
                    const auto [center, radius] = dynamical_ball(x0, v0, t, params.eps);
                    const auto field =
                        sample_field<d>(center, radius, params, stream_key(row_seeds[ridx], 0, i));
                    tallies[ridx].quenched.add(evolve(x0, v0, field, t, guards).flags);
                }
            }
            return tallies;
        });

    std::vector<RateRow> rows;
    for (std::size_t ridx = 0; ridx < n_rows; ++ridx) {
        FlagTally total;
        std::uint64_t lim_rec = 0, lim_int = 0;
        for (const auto& b : blocks) {
            total.merge(b[ridx].quenched);
            lim_rec += b[ridx].limit_recollision;
            lim_int += b[ridx].limit_interference;
        }
        RateRow row;
        row.eps = eps_grid[ridx];
        row.n = total.n;
        row.recollision = binomial_rate(total.recollision, total.n);
        row.interference = binomial_rate(lim_int, total.n);
        row.recollision_limit = binomial_rate(lim_rec, total.n);
        row.interference_quenched = total.interference;
        row.frozen = total.frozen;
        row.resolved = total.resolved;
        row.collapse = total.collapse;
        row.simultaneous = total.simultaneous;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lorentz
