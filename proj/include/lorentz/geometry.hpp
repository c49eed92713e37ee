// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "lorentz/rng.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

/// Relative discriminant threshold below which a ray/sphere contact is
/// treated as a graze and reported as a miss. Grazing contacts are
/// measure-zero and numerically ill-conditioned (the two roots coincide), so
/// resolving them as collisions would only amplify roundoff.
inline constexpr double kGrazeTol = 1e-14;

/// Slack on |x - center| = eps used to recognize "starts on the boundary"
/// configurations, relative to eps.
inline constexpr double kBoundaryTol = 1e-9;

namespace detail {

/// Core ray/sphere test without precondition checks. Returns the smallest
/// s >= 0 with |x + s v - center| = eps, if the ray reaches the sphere, in a
/// cancellation-free form: with m = x - center, b = m.v, the discriminant is
/// evaluated as |v|^2 (eps^2 - |m_perp|^2) through the perpendicular miss
/// vector m_perp = m - (b/|v|^2) v — the textbook b^2 - |v|^2 (|m|^2 - eps^2)
/// subtracts |m|^2-scale terms to produce an eps^2-scale result and loses
/// ~(|m|/eps)^2 in precision at long range — and the entry root is the
/// Citardauq quotient c2 / (sqrt(disc) - b), which stays accurate when the
/// two roots have very different magnitudes.
template <int d>
inline std::optional<double> first_hit_unchecked(const Vec<d>& x, const Vec<d>& v,
                                                 const Vec<d>& center, double eps) {
    const Vec<d> m = x - center;
    const double a = norm2(v);
    const double b = dot(m, v);
    const double c2 = norm2(m) - eps * eps;

    if (b >= 0.0) return std::nullopt;  // receding or tangent: no entry ahead

    const Vec<d> m_perp = m - (b / a) * v;
    const double disc = a * (eps * eps - norm2(m_perp));
    if (disc < kGrazeTol * a * eps * eps) return std::nullopt;  // miss or graze

    if (c2 <= 0.0) {
        // On (or marginally inside, within roundoff of) the boundary with
        // inward motion: contact happens immediately.
        return 0.0;
    }
    return c2 / (std::sqrt(disc) - b);  // b < 0, so the denominator is > 0 and s > 0
}

}  // namespace detail

/// First time s >= 0 at which the ray x + s v touches the sphere of radius
/// eps around center. Returns nothing when the ray misses, grazes, or starts
/// on the boundary moving outward. A start on the boundary moving inward is
/// an immediate hit at s = 0.
///
/// Throws:
///   std::invalid_argument("zero velocity")       when |v| = 0
///   std::domain_error("started inside scatterer") when x is strictly inside
template <int d>
inline std::optional<double> ray_sphere_first_hit(const Vec<d>& x, const Vec<d>& v,
                                                  const Vec<d>& center, double eps) {
    if (norm2(v) == 0.0) throw std::invalid_argument("zero velocity");
    const double c2 = norm2(x - center) - eps * eps;
    if (c2 < -2.0 * kBoundaryTol * eps * eps) throw std::domain_error("started inside scatterer");
    return detail::first_hit_unchecked(x, v, center, eps);
}

/// Unit outward normal at a contact point. The point must lie on the sphere
/// within 1e-9 * eps; the result is normalized by the actual distance so its
/// norm is exactly 1 up to one rounding.
template <int d>
inline Vec<d> outward_normal_at_hit(const Vec<d>& x_hit, const Vec<d>& center, double eps) {
    const Vec<d> m = x_hit - center;
    const double dist = norm(m);
    if (std::abs(dist - eps) > kBoundaryTol * eps) throw std::domain_error("point not on sphere");
    return m * (1.0 / dist);
}

/// Uniform point on S^{d-1}.
template <int d>
inline Vec<d> sample_unit_sphere(Stream& rng) {
    if constexpr (d == 2) {
        const double th = rng.uniform(0.0, 6.283185307179586476925287);
        return Vec2{{std::cos(th), std::sin(th)}};
    } else {
        // Normalized Gaussian triple; rejection of the (never observed in
        // practice) tiny-norm corner keeps the normalization well conditioned.
        while (true) {
            Vec3 g{{rng.normal(), rng.normal(), rng.normal()}};
            const double n2 = norm2(g);
            if (n2 > 1e-12) return g * (1.0 / std::sqrt(n2));
        }
    }
}

/// Uniform point in the closed ball B(center, radius).
template <int d>
inline Vec<d> sample_in_ball(const Vec<d>& center, double radius, Stream& rng) {
    const Vec<d> dir = sample_unit_sphere<d>(rng);
    const double u = rng.uniform();
    const double rad = radius * (d == 2 ? std::sqrt(u) : std::cbrt(u));
    return center + rad * dir;
}

/// The ball outside which scatterers cannot influence the tagged particle up
/// to time t: speeds never increase, so the particle stays within t|v| of its
/// start and only scatterers within t|v| + eps can be touched.
template <int d>
inline std::pair<Vec<d>, double> dynamical_ball(const Vec<d>& x, const Vec<d>& v, double t,
                                                double eps) {
    if (t < 0.0) throw std::invalid_argument("negative time");
    return {x, t * norm(v) + eps};
}

}  // namespace lorentz
