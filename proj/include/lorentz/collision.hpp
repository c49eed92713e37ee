// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <stdexcept>

#include "lorentz/quadrature.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

/// Restitution coefficient. r = 1 is the elastic case and is accepted
/// everywhere; r = 0 (sticky collisions) is excluded.
struct Restitution {
    double r = 1.0;

    explicit Restitution(double r_) : r(r_) {
        if (!(r > 0.0) || r > 1.0)
            throw std::invalid_argument("restitution must be in (0,1]");
    }
};

namespace detail {
inline void require_unit(double n2) {
    // |omega| = 1 within 1e-9 on the norm.
    if (std::abs(n2 - 1.0) > 2.1e-9) throw std::invalid_argument("omega must be a unit vector");
}
}  // namespace detail

/// Inelastic reflection of v against a wall with unit normal omega:
/// v' = v - (1+r)(v.omega) omega. The normal component is scaled by -r, the
/// tangential part is untouched, so |v'|^2 = |v|^2 - (1-r^2)(v.omega)^2.
template <int d>
inline Vec<d> scatter(const Vec<d>& v, const Vec<d>& omega, Restitution r) {
    detail::require_unit(norm2(omega));
    return v - ((1.0 + r.r) * dot(v, omega)) * omega;
}

/// Inverse of scatter: 'v = v - (1 + 1/r)(v.omega) omega, the pre-collisional
/// velocity that scatter maps onto v.
template <int d>
inline Vec<d> inverse_scatter(const Vec<d>& v, const Vec<d>& omega, Restitution r) {
    detail::require_unit(norm2(omega));
    return v - ((1.0 + 1.0 / r.r) * dot(v, omega)) * omega;
}

/// |det D(scatter)| as a map on velocities at fixed omega. The map is linear:
/// identity minus (1+r) times the projector onto omega, so the determinant is
/// 1 - (1+r) = -r in the normal direction and 1 tangentially.
inline double scatter_jacobian(Restitution r) { return r.r; }

/// C_d = integral over S^{d-1} of |e1 . sigma|, by quadrature. Cached per
/// (dimension, order); the exact values are 4 (d=2) and 2*pi (d=3).
double collision_constant_Cd(int d, const SphereQuadrature& quad);

/// Integral over S^{d-1} of |e1 . sigma|^3, by quadrature. Cached per
/// (dimension, order); the exact values are 8/3 (d=2) and pi (d=3).
double cubed_cosine_constant(int d, const SphereQuadrature& quad);

/// The collision frequency per unit speed under the mean-free-path
/// normalization mu eps^{d-1} = 1: a particle at speed s collides at rate
/// nu_d * s, where nu_d = |B^{d-1}(0,1)| is the cross-section volume of the
/// swept tube (2 in d=2, pi in d=3). Because the reflection map is even in
/// omega, the full-sphere moment C_d counts each geometric contact twice;
/// the identity C_d = 2 |B^{d-1}(0,1)| makes the rate constant exactly half
/// of collision_constant_Cd, and that is how it is computed here.
double collision_rate_constant(int d, const SphereQuadrature& quad);

/// Convenience: the rate constant at the library's reference quadrature
/// orders (65536 for d=2, 64 for d=3 — both give at least 1e-8 absolute
/// accuracy on the constants). Built once and cached.
double collision_rate_constant(int d);

/// Same convenience accessor for C_d itself.
double collision_constant_Cd(int d);

/// Same convenience accessor for the cubed moment (reference order 4096 in
/// d=2, 64 in d=3).
double cubed_cosine_constant(int d);

}  // namespace lorentz
