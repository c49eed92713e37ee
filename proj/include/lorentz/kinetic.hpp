// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lorentz/collision.hpp"
#include "lorentz/field.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/stats.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

/// Bounded test function phi(x, v) with a declared sup norm. When the
/// observable depends on the state only through |v| the optional
/// speed_profile should be set as well: series evaluation then switches to a
/// deterministic speed-marginal collocation, which is what makes properties
/// like mass conservation checkable to 1e-6 and beyond (per-term Monte Carlo
/// noise could never certify that).
template <int d>
struct Observable {
    std::function<double(const Vec<d>&, const Vec<d>&)> f;
    double sup_norm = 1.0;
    std::function<double(double)> speed_profile;  // optional: phi = profile(|v|)
};

template <int d>
Observable<d> constant_observable(double value) {
    Observable<d> o;
    o.f = [value](const Vec<d>&, const Vec<d>&) { return value; };
    o.sup_norm = std::abs(value);
    o.speed_profile = [value](double) { return value; };
    return o;
}

/// Smooth compactly supported bump centered at `center` with the given
/// support radius, sup norm exactly 1 (the standard mollifier profile).
template <int d>
Observable<d> make_bump(const Vec<d>& center, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("bump width must be positive");
    Observable<d> o;
    o.sup_norm = 1.0;
    o.f = [center, width](const Vec<d>& x, const Vec<d>&) {
        const double s2 = norm2(x - center) / (width * width);
        if (s2 >= 1.0) return 0.0;
        return std::exp(1.0 - 1.0 / (1.0 - s2));
    };
    return o;
}

/// One term index of the collision series: times t1 > t2 > ... > tk in (0,t)
/// and the corresponding contact normals.
template <int d>
struct CollisionSequence {
    std::vector<double> times;
    std::vector<Vec<d>> omegas;

    std::size_t k() const { return times.size(); }

    void validate(double t) const {
        if (times.size() != omegas.size())
            throw std::invalid_argument("collision sequence: times/omegas size mismatch");
        double prev = t;
        for (double ti : times) {
            if (!(ti > 0.0) || !(ti < prev))
                throw std::invalid_argument("collision sequence: times must decrease in (0,t)");
            prev = ti;
        }
    }
};

/// v^{(0)} = v, v^{(j)} = scatter(v^{(j-1)}, omega_j, r). Norms never grow.
template <int d>
std::vector<Vec<d>> forward_velocity_chain(const Vec<d>& v, const CollisionSequence<d>& seq,
                                           Restitution r) {
    std::vector<Vec<d>> chain{v};
    chain.reserve(seq.k() + 1);
    for (const auto& w : seq.omegas) chain.push_back(scatter(chain.back(), w, r));
    return chain;
}

/// v^{-0} = v, v^{-j} = inverse_scatter(v^{-(j-1)}, omega_j, r). Norms never
/// shrink and |v^{-k}| <= |v| / r^k.
template <int d>
std::vector<Vec<d>> backward_velocity_chain(const Vec<d>& v, const CollisionSequence<d>& seq,
                                            Restitution r) {
    std::vector<Vec<d>> chain{v};
    chain.reserve(seq.k() + 1);
    for (const auto& w : seq.omegas) chain.push_back(inverse_scatter(chain.back(), w, r));
    return chain;
}

struct SeriesConfig {
    int K_max = 12;
    double tail_tol = 1e-6;        // relative to the k = 0 term scale
    int time_nodes = 16;           // Gauss–Legendre points per time level
    int sphere_panel_nodes = 16;   // GL points per smooth |cos| panel
    int quad_k_max = 3;            // deepest nested-quadrature term (d = 2)
    std::int64_t mc_samples = 200000;  // Monte Carlo samples per term
    std::uint64_t seed = 0x5eedULL;
    int threads = 1;
};

struct SeriesResult {
    double value = 0.0;
    double tail_estimate = 0.0;   // bound on the discarded k > K_used mass
    double mc_std_error = 0.0;    // accumulated MC error of sampled terms
    int K_used = 0;
    bool truncated = false;       // K_max hit with tail above tolerance
    bool ill_conditioned = false; // last evaluated term exceeds the k=0 term
    std::vector<double> terms;    // terms[k] for k = 0..K_used
};

/// Initial datum for the forward series, with its declared exponential
/// velocity moment: M0 bounds f0(x,v) * exp(alpha |v|^p). The moment is what
/// controls the backward chains' 1/r^k speed growth in the tail bound.
template <int d>
struct InitialDatum {
    std::function<double(const Vec<d>&, const Vec<d>&)> evaluator;
    double alpha = 1.0;
    double p = 2.0;
    double M0 = 1.0;
};

/// Initial measure for duality pairings: either a point mass or a finite
/// weighted point set (a quadrature of a density).
template <int d>
struct InitialMeasure {
    struct WeightedPoint {
        Vec<d> x, v;
        double w;
    };
    std::optional<std::pair<Vec<d>, Vec<d>>> dirac;
    std::vector<WeightedPoint> grid;
};

/// Solution of the adjoint (backward) equation by its collision expansion:
/// psi(t,x,v) = sum over collision counts k of the time-simplex/sphere
/// integrals with survival exponents between collisions. Terms up to
/// cfg.quad_k_max are evaluated by nested quadrature in d = 2 (panel-split
/// Gauss–Legendre around the |cos| kinks in a frame aligned with the current
/// velocity); the remaining terms use Monte Carlo with sorted uniform times
/// (importance weight t^k/k!) and uniform sphere normals. Evaluation stops
/// once the rigorous per-term bound sup|phi| (nu |v| t)^k / k! falls below
/// tail_tol relative to the k = 0 scale, or at K_max (then `truncated`).
template <int d>
SeriesResult adjoint_series_psi(const Observable<d>& phi, double t, const Vec<d>& x,
                                const Vec<d>& v, const KineticParams& params,
                                const SeriesConfig& cfg = {});

/// Solution of the forward equation by the backward-chain series: inverse
/// scattering chains, weights |v^{-(l-1)} . omega_l| / (2 r^2), and the
/// datum evaluated at the reconstructed backward position. The truncation
/// tail uses the split-sum bound with the cutoff family
/// beta_{k,s} = 1/((k-s) e^{ln(1/r) s (s+1)}) (s = 0 and s = k handled
/// separately), which is the only rigorous handle on the 1/r^{k^2} chain
/// growth; its looseness is reported, not hidden.
template <int d>
SeriesResult duhamel_series_f(const InitialDatum<d>& f0, double t, const Vec<d>& x,
                              const Vec<d>& v, const KineticParams& params,
                              const SeriesConfig& cfg = {});

/// Pairing <phi, f(t)> = <psi(t), f0>: exact single adjoint evaluation for
/// point masses, a weighted sum of adjoint evaluations for gridded data.
template <int d>
double duality_pairing(const Observable<d>& phi, const InitialMeasure<d>& f0, double t,
                       const KineticParams& params, const SeriesConfig& cfg = {});

/// Upper bound on the ensemble kinetic energy at time t for a mass-1 initial
/// law with energy E0: (E0^{-1/2} + (1-r^2)/2 * K * t)^{-2}, where K is the
/// hemisphere cubed-cosine moment (half the full-sphere one — the same
/// double-counting convention as the rate constant). Elastic input returns E0.
double haff_energy_bound(double E0, double r, int d, double t, const SphereQuadrature& quad);
double haff_energy_bound(double E0, double r, int d, double t);

/// One sampled endpoint of the limiting velocity-jump process started at
/// (x, v): exponential waiting times with rate nu_d |v|, contact normals
/// drawn from the |v_hat . omega| kernel, reflection by scatter(). This is
/// the probabilistic counterpart of the adjoint series and serves as an
/// independent cross-check of it.
template <int d>
std::pair<Vec<d>, Vec<d>> limit_process_endpoint(const Vec<d>& x0, const Vec<d>& v0, double t,
                                                 Restitution r, Stream& rng);

/// Full record of one sampled jump-process path on [0, t]: `nodes` holds the
/// starting point, every collision point, and the final position (k + 2
/// entries for k collisions); `normals[i]` is the contact normal at
/// nodes[i + 1], oriented outward from the implied obstacle so that
/// v_pre . normal <= 0; `times` and `v_post` record when each collision
/// happened and the velocity it produced.
template <int d>
struct LimitPath {
    std::vector<Vec<d>> nodes;
    std::vector<Vec<d>> normals;
    std::vector<double> times;
    std::vector<Vec<d>> v_post;
    std::size_t collisions() const { return normals.size(); }
};

/// Samples the same process as limit_process_endpoint (identical draws from
/// `rng`, hence the identical endpoint) but keeps the whole path.
template <int d>
LimitPath<d> limit_process_path(const Vec<d>& x0, const Vec<d>& v0, double t, Restitution r,
                                Stream& rng);

struct PathologyFlags {
    bool recollision = false;
    bool interference = false;
};

/// Pathological-configuration indicators of a jump path at obstacle radius
/// eps. Each collision's obstacle center is reconstructed at
/// c_i = nodes[i+1] - eps * normals[i]; the jump process places these centers
/// freely, so their balls may overlap parts of the path that the event-driven
/// flow could never produce. `interference`: a reconstructed ball meets a leg
/// that ended at least two collisions earlier (the arrival leg touches the
/// ball at its endpoint by construction and is excluded). `recollision`: a
/// strictly later leg, including the final drift, re-enters a reconstructed
/// ball (the departure leg moves outward and never re-enters). For a fixed
/// path both indicators are monotone non-decreasing in eps, because
/// dist(c_i(eps), leg) - eps has derivative in [-2, 0]; evaluating one path
/// across a radius grid therefore yields exactly monotone rates.
template <int d>
PathologyFlags limit_path_pathologies(const LimitPath<d>& path, double eps);

namespace detail {

/// Speed-marginal partial sums by Chebyshev collocation: returns terms[k],
/// k = 0..K_max, of the adjoint series at (t, s0) for an observable that is a
/// function of speed only. Deterministic, ~1e-9 accurate.
std::vector<double> speed_marginal_terms(const std::function<double(double)>& profile,
                                         double t, double s0, int d, double r, int K_max);

/// log of the split-sum bound on the k-th forward-series term.
double log_duhamel_term_bound(int k, double t, double s0, int d, double r, double alpha,
                              double p, double M0);

/// Numeric tail of the forward bound beyond K.
double duhamel_tail_bound(int K, double t, double s0, int d, double r, double alpha, double p,
                          double M0);

}  // namespace detail

}  // namespace lorentz

#include "lorentz/kinetic_impl.hpp"
