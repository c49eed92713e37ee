// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include "lorentz/collision.hpp"

#include <map>
#include <mutex>

namespace lorentz {

namespace {

std::mutex g_cache_mutex;
std::map<std::pair<int, int>, double> g_cd_cache;
std::map<std::pair<int, int>, double> g_cubed_cache;

double first_moment(const SphereQuadrature& quad, int power) {
    double acc = 0.0, comp = 0.0;  // Kahan
    for (std::size_t i = 0; i < quad.size(); ++i) {
        const double c = std::abs(quad.nodes[i][0]);
        double term = quad.weights[i] * (power == 1 ? c : c * c * c);
        const double y = term - comp;
        const double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc;
}

double cached_moment(int d, const SphereQuadrature& quad, int power,
                     std::map<std::pair<int, int>, double>& cache) {
    if (quad.dimension != d)
        throw std::invalid_argument("quadrature dimension mismatch");
    const std::pair<int, int> key{d, quad.order};
    {
        std::lock_guard<std::mutex> lock(g_cache_mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const double value = first_moment(quad, power);
    std::lock_guard<std::mutex> lock(g_cache_mutex);
    cache.emplace(key, value);
    return value;
}

}  // namespace

double collision_constant_Cd(int d, const SphereQuadrature& quad) {
    return cached_moment(d, quad, 1, g_cd_cache);
}

double cubed_cosine_constant(int d, const SphereQuadrature& quad) {
    return cached_moment(d, quad, 3, g_cubed_cache);
}

double collision_rate_constant(int d, const SphereQuadrature& quad) {
    return 0.5 * collision_constant_Cd(d, quad);
}

namespace {

const SphereQuadrature& reference_quadrature(int d, int power) {
    static const SphereQuadrature q2_first = build_quadrature(2, 1 << 16);
    static const SphereQuadrature q2_cubed = build_quadrature(2, 4096);
    static const SphereQuadrature q3 = build_quadrature(3, 64);
    if (d == 2) return power == 1 ? q2_first : q2_cubed;
    if (d == 3) return q3;
    throw std::invalid_argument("dimension must be 2 or 3");
}

}  // namespace

double collision_constant_Cd(int d) {
    return collision_constant_Cd(d, reference_quadrature(d, 1));
}

double cubed_cosine_constant(int d) {
    return cubed_cosine_constant(d, reference_quadrature(d, 3));
}

double collision_rate_constant(int d) { return 0.5 * collision_constant_Cd(d); }

}  // namespace lorentz
