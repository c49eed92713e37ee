// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <vector>

#include "lorentz/vec.hpp"

namespace lorentz {

/// Nodes and weights discretizing the surface measure of S^{d-1}.
///
/// d = 2: uniform angles theta_j = 2*pi*j/order, weight 2*pi/order each.
/// d = 3: product rule with polar axis e1 — Gauss–Legendre in x = cos(polar)
///        split into the two panels [-1,0] and [0,1] (order/2 points each),
///        times a uniform azimuth of `order` points. The equator split makes
///        every integrand that is a smooth function of |x| per hemisphere —
///        in particular |e1·sigma| and |e1·sigma|^3 — integrate to machine
///        precision at tiny orders.
struct SphereQuadrature {
    int dimension = 0;
    int order = 0;
    std::vector<std::array<double, 3>> nodes;  // unit vectors, third entry 0 for d=2
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <int d>
    Vec<d> node(std::size_t i) const {
        Vec<d> u;
        for (int k = 0; k < d; ++k) u[k] = nodes[i][static_cast<std::size_t>(k)];
        return u;
    }
};

/// Builds the rule described above. order >= 4; for d = 3 it is rounded up to
/// the next even number so the two polar panels are equal.
SphereQuadrature build_quadrature(int d, int order);

/// Gauss–Legendre nodes/weights on [a, b] (Newton iteration on P_n; standard
/// "gauleq" construction, accurate to ~1e-15 for n up to several hundred).
void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights);

}  // namespace lorentz
