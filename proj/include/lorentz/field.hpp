// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorentz/collision.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/rng.hpp"
#include "lorentz/vec.hpp"

namespace lorentz {

/// Physical parameters of one experiment. Under the mean-free-path
/// normalization ("bg_locked") the intensity is tied to the scatterer radius
/// by mu * eps^{d-1} = 1, which keeps the collision rate order one as eps
/// shrinks.
struct KineticParams {
    int d = 2;
    double r = 1.0;     // restitution
    double eps = 0.1;   // scatterer radius
    double mu = 10.0;   // Poisson intensity
    bool bg_locked = true;

    void validate() const {
        if (d != 2 && d != 3) throw std::invalid_argument("dimension must be 2 or 3");
        if (!(r > 0.0) || r > 1.0) throw std::invalid_argument("restitution must be in (0,1]");
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        if (!(mu > 0.0)) throw std::invalid_argument("mu must be positive");
        if (bg_locked && std::abs(mu * std::pow(eps, d - 1) - 1.0) > 1e-12)
            throw std::invalid_argument("bg_locked requires mu * eps^{d-1} = 1");
    }

    Restitution restitution() const { return Restitution(r); }

    /// Parameters with mu derived from eps so that mu * eps^{d-1} = 1.
    static KineticParams bg(int d, double r, double eps) {
        KineticParams p;
        p.d = d;
        p.r = r;
        p.eps = eps;
        p.mu = 1.0 / std::pow(eps, d - 1);
        p.bg_locked = true;
        return p;
    }
};

/// Volume of the d-ball of given radius.
template <int d>
inline double ball_volume(double radius) {
    if constexpr (d == 2) return M_PI * radius * radius;
    else return (4.0 / 3.0) * M_PI * radius * radius * radius;
}

/// One realization of the Poisson scatterer process restricted to a ball.
/// Regenerating from the same (seed, region, params) reproduces the centers
/// bit-exactly.
template <int d>
struct ScattererField {
    std::vector<Vec<d>> centers;
    Vec<d> region_center{};
    double region_radius = 0.0;
    std::uint64_t seed = 0;
    KineticParams params;
};

/// Samples N ~ Poisson(mu |region|) centers i.i.d. uniform in the region.
/// The expected count is capped at 1e8 as a memory guard.
template <int d>
ScattererField<d> sample_field(const Vec<d>& region_center, double region_radius,
                               const KineticParams& params, std::uint64_t seed) {
    if (!(region_radius > 0.0)) throw std::invalid_argument("region radius must be positive");
    params.validate();
    const double lambda = params.mu * ball_volume<d>(region_radius);
    if (lambda > 1e8) throw std::runtime_error("field too dense");

    Stream rng(seed);
    const std::uint64_t n = rng.poisson(lambda);

    ScattererField<d> field;
    field.region_center = region_center;
    field.region_radius = region_radius;
    field.seed = seed;
    field.params = params;
    field.centers.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i)
        field.centers.push_back(sample_in_ball<d>(region_center, region_radius, rng));
    return field;
}

/// True iff some center lies in the closed ball B(x0, eps), i.e. the tagged
/// particle starts inside (or tangent to) a scatterer.
template <int d>
bool initial_overlap(const ScattererField<d>& field, const Vec<d>& x0) {
    const double eps2 = field.params.eps * field.params.eps;
    for (const auto& c : field.centers)
        if (norm2(x0 - c) <= eps2) return true;
    return false;
}

/// Overlap check in the shape used by the flow module: the field is passed
/// through untouched (callers freeze the trajectory on overlap rather than
/// delete scatterers, which would bias the measure).
template <int d>
struct OverlapFiltered {
    const ScattererField<d>& field;
    bool overlapped;
};

template <int d>
OverlapFiltered<d> filter_initial_overlap(const ScattererField<d>& field, const Vec<d>& x0) {
    return {field, initial_overlap(field, x0)};
}

/// Debug dump: one center per row, header cx,cy[,cz].
template <int d>
std::string field_to_csv(const ScattererField<d>& field) {
    std::string out = d == 2 ? "cx,cy\n" : "cx,cy,cz\n";
    char buf[128];
    for (const auto& c : field.centers) {
        if constexpr (d == 2)
            std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c[0], c[1]);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c[0], c[1], c[2]);
        out += buf;
    }
    return out;
}

}  // namespace lorentz
