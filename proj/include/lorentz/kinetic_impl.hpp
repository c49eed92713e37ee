// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
//
// Template bodies for kinetic.hpp. Include kinetic.hpp, not this file.
#pragma once

#include <algorithm>
#include <cmath>

#include "lorentz/geometry.hpp"

namespace lorentz {

namespace detail {

inline constexpr double kTwoPi = 6.283185307179586476925287;

inline double sphere_surface(int d) { return d == 2 ? kTwoPi : 2.0 * kTwoPi; }

inline Vec<2> perp(const Vec<2>& u) { return Vec<2>{-u[1], u[0]}; }

/// Orthonormal pair spanning the plane orthogonal to the unit vector n.
inline std::pair<Vec<3>, Vec<3>> orthonormal_complement(const Vec<3>& n) {
    const Vec<3> seed = std::abs(n[0]) < 0.9 ? Vec<3>{1.0, 0.0, 0.0} : Vec<3>{0.0, 1.0, 0.0};
    const Vec<3> e1 = normalized(seed - dot(seed, n) * n);
    return {e1, cross(n, e1)};
}

/// Contact normal drawn from the |v_hat . omega| collision kernel (restricted
/// to the forward hemisphere, which is lossless because the reflection is
/// even in omega).
template <int d>
Vec<d> sample_kernel_normal(const Vec<d>& v_hat, Stream& rng) {
    if constexpr (d == 2) {
        const double sg = 2.0 * rng.uniform() - 1.0;  // sin(gamma) ~ U(-1,1)
        const double cg = std::sqrt(std::max(0.0, 1.0 - sg * sg));
        return cg * v_hat + sg * perp(v_hat);
    } else {
        const double ct = std::sqrt(rng.uniform());  // cos^2(theta) ~ U(0,1)
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        const double ph = rng.uniform(0.0, kTwoPi);
        const auto [e1, e2] = orthonormal_complement(v_hat);
        return ct * v_hat + (st * std::cos(ph)) * e1 + (st * std::sin(ph)) * e2;
    }
}

/// Per-term magnitude bounds of the adjoint series, b_k = sup (lam)^k / k!
/// with lam = nu |v| t: the angular weights integrate to nu|v| per unit time
/// and every survival exponent is <= 0.
inline double adjoint_term_bound(double sup_norm, double lam, int k) {
    double b = sup_norm;
    for (int j = 1; j <= k; ++j) b *= lam / j;
    return b;
}

inline double adjoint_tail_sum(double sup_norm, double lam, int K) {
    double b = adjoint_term_bound(sup_norm, lam, K + 1);
    double s = 0.0;
    for (int j = K + 1; j < K + 400; ++j) {
        s += b;
        b *= lam / (j + 1);
        if (b < 1e-18 * (s + 1e-300)) break;
    }
    return s;
}

/// Nested-quadrature evaluation of the k-collision adjoint term in d = 2.
/// Each level integrates the collision time over [0, t_prev] (Gauss–Legendre)
/// and the contact normal over two half-circle panels measured from the
/// current velocity direction, so the |cos| kink always sits on a panel
/// boundary and the per-panel integrand is analytic.
template <class Phi>
double adjoint_quad_level(const Phi& phi, int level, int k, double t_prev, const Vec<2>& v_prev,
                          const Vec<2>& pos, double expo, double nu, Restitution r,
                          const std::vector<double>& tg, const std::vector<double>& tw,
                          const std::vector<double>& gg, const std::vector<double>& gw) {
    if (level > k) {
        return std::exp(expo - nu * norm(v_prev) * t_prev) * phi(pos + t_prev * v_prev, v_prev);
    }
    const double s_prev = norm(v_prev);
    if (s_prev == 0.0) return 0.0;  // zero speed: collision rate vanishes
    const Vec<2> vhat = (1.0 / s_prev) * v_prev;
    const Vec<2> vperp = perp(vhat);
    double acc = 0.0;
    for (std::size_t i = 0; i < tg.size(); ++i) {
        const double tl = 0.5 * t_prev * (tg[i] + 1.0);
        const double wt = 0.5 * t_prev * tw[i];
        const Vec<2> pos_l = pos + (t_prev - tl) * v_prev;
        const double expo_l = expo - nu * s_prev * (t_prev - tl);
        for (int panel = 0; panel < 2; ++panel) {
            const double shift = panel == 0 ? 0.0 : 0.5 * kTwoPi;
            for (std::size_t j = 0; j < gg.size(); ++j) {
                const double gamma = 0.25 * kTwoPi * gg[j] + shift;
                const double cg = std::cos(gamma);
                const Vec<2> omega = cg * vhat + std::sin(gamma) * vperp;
                const double wfac = wt * (0.25 * kTwoPi * gw[j]) * s_prev * std::abs(cg) * 0.5;
                acc += wfac * adjoint_quad_level(phi, level + 1, k, tl, scatter(v_prev, omega, r),
                                                 pos_l, expo_l, nu, r, tg, tw, gg, gw);
            }
        }
    }
    return acc;
}

/// Same scheme for the forward (backward-chain) term: inverse scattering,
/// gain weight |v . omega| / (2 r^2), exponent nu * t_l * (s_prev - s_next)
/// accumulated on top of the global survival prefactor carried in `expo`.
template <class F0>
double duhamel_quad_level(const F0& f0, int level, int k, double t_prev, const Vec<2>& vb_prev,
                          const Vec<2>& y, double expo, double nu, Restitution r,
                          const std::vector<double>& tg, const std::vector<double>& tw,
                          const std::vector<double>& gg, const std::vector<double>& gw) {
    if (level > k) return std::exp(expo) * f0(y, vb_prev);
    const double s_prev = norm(vb_prev);
    if (s_prev == 0.0) return 0.0;
    const Vec<2> vhat = (1.0 / s_prev) * vb_prev;
    const Vec<2> vperp = perp(vhat);
    const double inv2r2 = 0.5 / (r.r * r.r);
    double acc = 0.0;
    for (std::size_t i = 0; i < tg.size(); ++i) {
        const double tl = 0.5 * t_prev * (tg[i] + 1.0);
        const double wt = 0.5 * t_prev * tw[i];
        for (int panel = 0; panel < 2; ++panel) {
            const double shift = panel == 0 ? 0.0 : 0.5 * kTwoPi;
            for (std::size_t j = 0; j < gg.size(); ++j) {
                const double gamma = 0.25 * kTwoPi * gg[j] + shift;
                const double cg = std::cos(gamma);
                const Vec<2> omega = cg * vhat + std::sin(gamma) * vperp;
                const Vec<2> vb = inverse_scatter(vb_prev, omega, r);
                const double wfac = wt * (0.25 * kTwoPi * gw[j]) * s_prev * std::abs(cg) * inv2r2;
                acc += wfac * duhamel_quad_level(f0, level + 1, k, tl, vb, y + tl * (vb_prev - vb),
                                                 expo + nu * tl * (s_prev - norm(vb)), nu, r, tg,
                                                 tw, gg, gw);
            }
        }
    }
    return acc;
}

/// Monte Carlo estimate of the k-collision adjoint term: sorted uniform
/// collision times carry the simplex volume t^k/k! as importance weight,
/// uniform sphere normals carry |S^{d-1}|^k against the kernel density.
template <int d, class Phi>
EstimateWithCI adjoint_term_mc(const Phi& phi, double t, const Vec<d>& x, const Vec<d>& v,
                               double nu, Restitution r, int k, const SeriesConfig& cfg) {
    const double surf = sphere_surface(d);
    auto worker = [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
        MomentAccumulator acc;
        std::vector<double> ts(static_cast<std::size_t>(k));
        for (std::uint64_t i = lo; i < hi; ++i) {
            Stream st(stream_key(cfg.seed, 0xAD50u + static_cast<std::uint64_t>(k), i, 0));
            for (auto& tv : ts) tv = t * st.uniform();
            std::sort(ts.begin(), ts.end(), std::greater<double>());
            double w = 1.0;
            for (int l = 1; l <= k; ++l) w *= t / l;
            Vec<d> pos = x, vcur = v;
            double expo = 0.0, tprev = t;
            for (int l = 0; l < k; ++l) {
                const Vec<d> om = sample_unit_sphere<d>(st);
                w *= surf * std::abs(dot(vcur, om)) * 0.5;
                expo -= nu * norm(vcur) * (tprev - ts[static_cast<std::size_t>(l)]);
                pos += (tprev - ts[static_cast<std::size_t>(l)]) * vcur;
                vcur = scatter(vcur, om, r);
                tprev = ts[static_cast<std::size_t>(l)];
            }
            expo -= nu * norm(vcur) * tprev;
            acc.add(w * std::exp(expo) * phi(pos + tprev * vcur, vcur));
        }
        return acc;
    };
    auto blocks = parallel_blocks<MomentAccumulator>(static_cast<std::uint64_t>(cfg.mc_samples),
                                                     cfg.threads, worker);
    MomentAccumulator total;
    for (const auto& b : blocks) total.merge(b);
    return total.estimate();
}

template <int d, class F0>
EstimateWithCI duhamel_term_mc(const F0& f0, double t, const Vec<d>& x, const Vec<d>& v,
                               double nu, Restitution r, int k, const SeriesConfig& cfg) {
    const double surf = sphere_surface(d);
    const double inv2r2 = 0.5 / (r.r * r.r);
    auto worker = [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
        MomentAccumulator acc;
        std::vector<double> ts(static_cast<std::size_t>(k));
        for (std::uint64_t i = lo; i < hi; ++i) {
            Stream st(stream_key(cfg.seed, 0xD150u + static_cast<std::uint64_t>(k), i, 0));
            for (auto& tv : ts) tv = t * st.uniform();
            std::sort(ts.begin(), ts.end(), std::greater<double>());
            double w = 1.0;
            for (int l = 1; l <= k; ++l) w *= t / l;
            Vec<d> y = x - t * v, vb = v;
            double expo = -nu * norm(v) * t;
            for (int l = 0; l < k; ++l) {
                const Vec<d> om = sample_unit_sphere<d>(st);
                const double tl = ts[static_cast<std::size_t>(l)];
                const Vec<d> vb_next = inverse_scatter(vb, om, r);
                w *= surf * std::abs(dot(vb, om)) * inv2r2;
                expo += nu * tl * (norm(vb) - norm(vb_next));
                y += tl * (vb - vb_next);
                vb = vb_next;
            }
            acc.add(w * std::exp(expo) * f0(y, vb));
        }
        return acc;
    };
    auto blocks = parallel_blocks<MomentAccumulator>(static_cast<std::uint64_t>(cfg.mc_samples),
                                                     cfg.threads, worker);
    MomentAccumulator total;
    for (const auto& b : blocks) total.merge(b);
    return total.estimate();
}

inline void check_series_config(const SeriesConfig& cfg) {
    if (cfg.K_max < 0) throw std::invalid_argument("K_max must be >= 0");
    if (!(cfg.tail_tol > 0.0)) throw std::invalid_argument("tail_tol must be positive");
    if (cfg.time_nodes < 2 || cfg.sphere_panel_nodes < 2 || cfg.mc_samples < 1)
        throw std::invalid_argument("series quadrature sizes must be positive");
}

}  // namespace detail

template <int d>
SeriesResult adjoint_series_psi(const Observable<d>& phi, double t, const Vec<d>& x,
                                const Vec<d>& v, const KineticParams& params,
                                const SeriesConfig& cfg) {
    params.validate();
    if (params.d != d) throw std::invalid_argument("params dimension mismatch");
    if (t < 0.0) throw std::invalid_argument("negative time");
    if (!phi.f && !phi.speed_profile) throw std::invalid_argument("observable has no evaluator");
    detail::check_series_config(cfg);

    const Restitution r = params.restitution();
    const double nu = collision_rate_constant(d);
    const double s0 = norm(v);
    const double lam = nu * s0 * t;

    SeriesResult out;
    const double phi_free =
        phi.speed_profile ? phi.speed_profile(s0) : phi.f(x + t * v, v);
    out.terms.push_back(std::exp(-lam) * phi_free);
    out.value = out.terms[0];

    if (lam == 0.0 || cfg.K_max == 0 || phi.sup_norm == 0.0) {
        out.truncated = cfg.K_max == 0 && lam > 0.0 && phi.sup_norm > 0.0;
        out.tail_estimate = out.truncated ? detail::adjoint_tail_sum(phi.sup_norm, lam, 0) : 0.0;
        return out;
    }

    // Stop once the rigorous bound on the next term drops below tolerance,
    // measured against the k = 0 scale.
    const double thresh =
        cfg.tail_tol * std::max(std::abs(out.terms[0]), phi.sup_norm * std::exp(-lam));
    int K_target = cfg.K_max;
    bool reached_tol = false;
    for (int K = 0; K <= cfg.K_max; ++K) {
        if (detail::adjoint_term_bound(phi.sup_norm, lam, K + 1) < thresh) {
            K_target = K;
            reached_tol = true;
            break;
        }
    }

    if (phi.speed_profile) {
        const auto terms =
            detail::speed_marginal_terms(phi.speed_profile, t, s0, d, params.r, K_target);
        for (int k = 1; k <= K_target; ++k) out.terms.push_back(terms[static_cast<std::size_t>(k)]);
    } else {
        std::vector<double> tg, tw, gg, gw;
        if constexpr (d == 2) {
            gauss_legendre(cfg.time_nodes, -1.0, 1.0, tg, tw);
            gauss_legendre(cfg.sphere_panel_nodes, -1.0, 1.0, gg, gw);
        }
        for (int k = 1; k <= K_target; ++k) {
            if (d == 2 && k <= cfg.quad_k_max) {
                if constexpr (d == 2) {
                    out.terms.push_back(detail::adjoint_quad_level(
                        phi.f, 1, k, t, v, x, 0.0, nu, r, tg, tw, gg, gw));
                }
            } else {
                const auto est = detail::adjoint_term_mc<d>(phi.f, t, x, v, nu, r, k, cfg);
                out.terms.push_back(est.mean);
                out.mc_std_error = std::hypot(out.mc_std_error, est.std_error);
            }
        }
    }

    out.K_used = K_target;
    out.truncated = !reached_tol;
    out.tail_estimate = detail::adjoint_tail_sum(phi.sup_norm, lam, K_target);
    out.value = 0.0;
    for (double term : out.terms) out.value += term;

    // A priori growth bound: |psi| <= sup|phi| e^{C_d |v| t} (the gain side
    // doubles the rate in the crude estimate). Guards against integration
    // bugs rather than user input.
    const double growth = phi.sup_norm * std::exp(2.0 * lam) * (1.0 + 1e-9) + 1e-12 +
                          4.0 * out.mc_std_error;
    if (std::abs(out.value) > growth)
        throw std::logic_error("adjoint series exceeded its growth bound");
    return out;
}

template <int d>
SeriesResult duhamel_series_f(const InitialDatum<d>& f0, double t, const Vec<d>& x,
                              const Vec<d>& v, const KineticParams& params,
                              const SeriesConfig& cfg) {
    params.validate();
    if (params.d != d) throw std::invalid_argument("params dimension mismatch");
    if (t < 0.0) throw std::invalid_argument("negative time");
    if (!f0.evaluator) throw std::invalid_argument("initial datum has no evaluator");
    if (!(f0.alpha > 0.0) || !(f0.p > 0.0) || !(f0.M0 > 0.0))
        throw std::invalid_argument("initial datum needs a positive exponential moment");
    detail::check_series_config(cfg);

    const Restitution r = params.restitution();
    const double nu = collision_rate_constant(d);
    const double s0 = norm(v);

    SeriesResult out;
    out.terms.push_back(std::exp(-nu * s0 * t) * f0.evaluator(x - t * v, v));
    out.value = out.terms[0];
    if (t == 0.0 || s0 == 0.0 || cfg.K_max == 0) {
        out.truncated = cfg.K_max == 0 && t > 0.0 && s0 > 0.0;
        out.tail_estimate =
            out.truncated
                ? detail::duhamel_tail_bound(0, t, s0, d, params.r, f0.alpha, f0.p, f0.M0)
                : 0.0;
        return out;
    }

    const double b0 = std::exp(
        detail::log_duhamel_term_bound(0, t, s0, d, params.r, f0.alpha, f0.p, f0.M0));
    const double thresh = cfg.tail_tol * std::max(std::abs(out.terms[0]), b0);
    int K_target = cfg.K_max;
    bool reached_tol = false;
    for (int K = 0; K <= cfg.K_max; ++K) {
        const double next = std::exp(detail::log_duhamel_term_bound(K + 1, t, s0, d, params.r,
                                                                    f0.alpha, f0.p, f0.M0));
        if (next < thresh) {
            K_target = K;
            reached_tol = true;
            break;
        }
    }

    std::vector<double> tg, tw, gg, gw;
    if constexpr (d == 2) {
        gauss_legendre(cfg.time_nodes, -1.0, 1.0, tg, tw);
        gauss_legendre(cfg.sphere_panel_nodes, -1.0, 1.0, gg, gw);
    }
    for (int k = 1; k <= K_target; ++k) {
        if (d == 2 && k <= cfg.quad_k_max) {
            if constexpr (d == 2) {
                out.terms.push_back(detail::duhamel_quad_level(f0.evaluator, 1, k, t, v, x - t * v,
                                                               -nu * s0 * t, nu, r, tg, tw, gg,
                                                               gw));
            }
        } else {
            const auto est = detail::duhamel_term_mc<d>(f0.evaluator, t, x, v, nu, r, k, cfg);
            out.terms.push_back(est.mean);
            out.mc_std_error = std::hypot(out.mc_std_error, est.std_error);
        }
    }

    out.K_used = K_target;
    out.truncated = !reached_tol;
    out.tail_estimate =
        detail::duhamel_tail_bound(K_target, t, s0, d, params.r, f0.alpha, f0.p, f0.M0);
    out.value = 0.0;
    for (double term : out.terms) out.value += term;
    out.ill_conditioned =
        out.K_used >= 1 && std::abs(out.terms.back()) > std::abs(out.terms.front());
    return out;
}

template <int d>
double duality_pairing(const Observable<d>& phi, const InitialMeasure<d>& f0, double t,
                       const KineticParams& params, const SeriesConfig& cfg) {
    if (f0.dirac) {
        return adjoint_series_psi(phi, t, f0.dirac->first, f0.dirac->second, params, cfg).value;
    }
    if (f0.grid.empty()) throw std::invalid_argument("empty initial measure");
    double acc = 0.0;
    for (const auto& pt : f0.grid)
        acc += pt.w * adjoint_series_psi(phi, t, pt.x, pt.v, params, cfg).value;
    return acc;
}

template <int d>
std::pair<Vec<d>, Vec<d>> limit_process_endpoint(const Vec<d>& x0, const Vec<d>& v0, double t,
                                                 Restitution r, Stream& rng) {
    if (t < 0.0) throw std::invalid_argument("negative time");
    const double nu = collision_rate_constant(d);
    Vec<d> x = x0, v = v0;
    double remaining = t;
    while (true) {
        const double s = norm(v);
        if (s == 0.0) break;
        const double wait = -std::log(1.0 - rng.uniform()) / (nu * s);
        if (wait >= remaining) break;
        x += wait * v;
        remaining -= wait;
        v = scatter(v, detail::sample_kernel_normal<d>((1.0 / s) * v, rng), r);
    }
    x += remaining * v;
    return {x, v};
}

template <int d>
LimitPath<d> limit_process_path(const Vec<d>& x0, const Vec<d>& v0, double t, Restitution r,
                                Stream& rng) {
    if (t < 0.0) throw std::invalid_argument("negative time");
    const double nu = collision_rate_constant(d);
    LimitPath<d> path;
    path.nodes.push_back(x0);
    Vec<d> x = x0, v = v0;
    double now = 0.0, remaining = t;
    while (true) {
        const double s = norm(v);
        if (s == 0.0) break;
        const double wait = -std::log(1.0 - rng.uniform()) / (nu * s);
        if (wait >= remaining) break;
        x += wait * v;
        now += wait;
        remaining -= wait;
        // sample_kernel_normal returns the forward representative; the
        // physical contact normal points against the incoming velocity and
        // the reflection is even in the normal, so flip before recording.
        const Vec<d> n = -1.0 * detail::sample_kernel_normal<d>((1.0 / s) * v, rng);
        v = scatter(v, n, r);
        path.nodes.push_back(x);
        path.normals.push_back(n);
        path.times.push_back(now);
        path.v_post.push_back(v);
    }
    x += remaining * v;
    path.nodes.push_back(x);
    return path;
}

template <int d>
PathologyFlags limit_path_pathologies(const LimitPath<d>& path, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    PathologyFlags out;
    const std::size_t k = path.collisions();
    // Legs run nodes[j] -> nodes[j+1] for j = 0..k; collision i (1-based)
    // sits at nodes[i] between legs i-1 (arrival) and i (departure).
    for (std::size_t i = 1; i <= k; ++i) {
        const Vec<d> c = path.nodes[i] - eps * path.normals[i - 1];
        if (!out.interference)
            for (std::size_t j = 0; j + 2 <= i; ++j)
                if (point_segment_distance<d>(c, path.nodes[j], path.nodes[j + 1]) <= eps) {
                    out.interference = true;
                    break;
                }
        if (!out.recollision)
            for (std::size_t j = i + 1; j <= k; ++j)
                if (point_segment_distance<d>(c, path.nodes[j], path.nodes[j + 1]) <= eps) {
                    out.recollision = true;
                    break;
                }
        if (out.recollision && out.interference) break;
    }
    return out;
}

}  // namespace lorentz
