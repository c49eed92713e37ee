// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include "lorentz/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace lorentz {

void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);

    const double xm = 0.5 * (b + a);
    const double xl = 0.5 * (b - a);
    const int m = (n + 1) / 2;  // roots come in +/- pairs on [-1,1]

    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess for the i-th root of P_n.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        const double w = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        nodes[static_cast<std::size_t>(i)] = xm - xl * z;
        nodes[static_cast<std::size_t>(n - 1 - i)] = xm + xl * z;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
}

SphereQuadrature build_quadrature(int d, int order) {
    if (d != 2 && d != 3) throw std::invalid_argument("build_quadrature: dimension must be 2 or 3");
    if (order < 4) throw std::invalid_argument("build_quadrature: order must be >= 4");

    SphereQuadrature q;
    q.dimension = d;

    if (d == 2) {
        q.order = order;
        q.nodes.reserve(static_cast<std::size_t>(order));
        q.weights.assign(static_cast<std::size_t>(order), 2.0 * M_PI / order);
        for (int j = 0; j < order; ++j) {
            const double th = 2.0 * M_PI * j / order;
            q.nodes.push_back({std::cos(th), std::sin(th), 0.0});
        }
        return q;
    }

    if (order % 2 != 0) ++order;
    q.order = order;
    const int n_half = order / 2;

    std::vector<double> xs_lo, ws_lo, xs_hi, ws_hi;
    gauss_legendre(n_half, -1.0, 0.0, xs_lo, ws_lo);
    gauss_legendre(n_half, 0.0, 1.0, xs_hi, ws_hi);
    std::vector<double> xs(xs_lo), ws(ws_lo);
    xs.insert(xs.end(), xs_hi.begin(), xs_hi.end());
    ws.insert(ws.end(), ws_hi.begin(), ws_hi.end());

    const double wphi = 2.0 * M_PI / order;
    q.nodes.reserve(static_cast<std::size_t>(order) * xs.size());
    q.weights.reserve(q.nodes.capacity());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
        for (int j = 0; j < order; ++j) {
            const double phi = 2.0 * M_PI * j / order;
            // Polar axis along e1: the first component carries cos(polar).
            q.nodes.push_back({x, s * std::cos(phi), s * std::sin(phi)});
            q.weights.push_back(ws[i] * wphi);
        }
    }
    return q;
}

}  // namespace lorentz
