// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "lorentz/collision.hpp"
#include "lorentz/geometry.hpp"
#include "lorentz/quadrature.hpp"
#include "lorentz/rng.hpp"

using namespace lorentz;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("restitution domain") {
    CHECK_THROWS_WITH_AS(Restitution(0.0), "restitution must be in (0,1]", std::invalid_argument);
    CHECK_THROWS_AS(Restitution(-0.2), std::invalid_argument);
    CHECK_THROWS_AS(Restitution(1.0 + 1e-9), std::invalid_argument);
    CHECK(Restitution(1.0).r == 1.0);
    CHECK(Restitution(1e-9).r == 1e-9);
}

TEST_CASE("scatter: hand case and non-unit normal rejection") {
    const Vec2 v{{1.0, 0.0}};
    const Vec2 omega{{-1.0, 0.0}};
    const Vec2 vp = scatter(v, omega, Restitution(0.5));
    CHECK(vp[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(vp[1] == 0.0);
    CHECK_THROWS_AS(scatter(v, Vec2{{-0.9, 0.0}}, Restitution(0.5)), std::invalid_argument);
}

TEST_CASE("scatter algebra on random triples") {
    Stream rng(stream_key(0xC011ABULL));
    for (int i = 0; i < 20000; ++i) {
        const int dim = (i % 2) ? 2 : 3;
        const double r = rng.uniform(0.05, 1.0);
        const Restitution rr(r);
        if (dim == 2) {
            const Vec2 v = rng.uniform(0.1, 4.0) * sample_unit_sphere<2>(rng);
            const Vec2 w = sample_unit_sphere<2>(rng);
            const Vec2 vp = scatter(v, w, rr);
            // Normal law, tangential invariance, energy identity.
            CHECK(std::abs(dot(vp, w) + r * dot(v, w)) <= 1e-12 * norm(v));
            const Vec2 tv = v - dot(v, w) * w;
            const Vec2 tvp = vp - dot(vp, w) * w;
            CHECK(norm(tvp - tv) <= 1e-12 * norm(v));
            const double lhs = norm2(vp);
            const double rhs = norm2(v) - (1.0 - r * r) * dot(v, w) * dot(v, w);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * norm2(v));
            // Speed sandwich r|v| <= |v'| <= |v|.
            CHECK(norm(vp) <= norm(v) * (1.0 + 1e-14));
            CHECK(norm(vp) >= r * norm(v) * (1.0 - 1e-14));
            // Inverse round-trips both ways.
            CHECK(norm(inverse_scatter(vp, w, rr) - v) <= 1e-12 * norm(v));
            CHECK(norm(scatter(inverse_scatter(v, w, rr), w, rr) - v) <= 1e-12 * norm(v));
        } else {
            const Vec3 v = rng.uniform(0.1, 4.0) * sample_unit_sphere<3>(rng);
            const Vec3 w = sample_unit_sphere<3>(rng);
            const Vec3 vp = scatter(v, w, rr);
            CHECK(std::abs(dot(vp, w) + r * dot(v, w)) <= 1e-12 * norm(v));
            const double lhs = norm2(vp);
            const double rhs = norm2(v) - (1.0 - r * r) * dot(v, w) * dot(v, w);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * norm2(v));
            CHECK(norm(inverse_scatter(vp, w, rr) - v) <= 1e-12 * norm(v));
        }
    }
}

TEST_CASE("elastic limit is specular reflection") {
    Stream rng(stream_key(0xE1A5ULL));
    for (int i = 0; i < 1000; ++i) {
        const Vec2 v = rng.uniform(0.5, 2.0) * sample_unit_sphere<2>(rng);
        const Vec2 w = sample_unit_sphere<2>(rng);
        const Vec2 vp = scatter(v, w, Restitution(1.0));
        CHECK(std::abs(norm(vp) - norm(v)) <= 1e-14 * norm(v));
        const Vec2 mirror = v - 2.0 * dot(v, w) * w;
        CHECK(norm(vp - mirror) <= 1e-14 * norm(v));
    }
}

TEST_CASE("velocity-space Jacobian equals r (finite differences, d=2)") {
    // det D(kappa_omega) at fixed omega: analytic value r. Central-difference
    // 2x2 determinant, h tuned so the FD error sits well under 1e-6.
    Stream rng(stream_key(0x1ACBULL));
    for (double r : {0.3, 0.5, 0.9, 1.0}) {
        const Restitution rr(r);
        for (int i = 0; i < 50; ++i) {
            const Vec2 v = rng.uniform(0.5, 2.0) * sample_unit_sphere<2>(rng);
            const Vec2 w = sample_unit_sphere<2>(rng);
            const double h = 1e-6;
            Vec2 cols[2];
            for (int k = 0; k < 2; ++k) {
                Vec2 vp = v, vm = v;
                vp[k] += h;
                vm[k] -= h;
                cols[k] = (scatter(vp, w, rr) - scatter(vm, w, rr)) * (1.0 / (2.0 * h));
            }
            const double det = cols[0][0] * cols[1][1] - cols[0][1] * cols[1][0];
            CHECK(std::abs(std::abs(det) - r) < 1e-6);
            CHECK(scatter_jacobian(rr) == r);
        }
    }
}

TEST_CASE("collision constants from quadrature") {
    // Antiderivative oracles on the circle / sphere: full first moment 4 and
    // 2 pi; cubed moment 8/3 and pi; physical rate = half the first moment.
    CHECK(std::abs(collision_constant_Cd(2) - 4.0) < 1e-8);
    CHECK(std::abs(collision_constant_Cd(3) - 2.0 * kPi) < 1e-10);
    CHECK(std::abs(cubed_cosine_constant(2) - 8.0 / 3.0) < 1e-8);
    CHECK(std::abs(cubed_cosine_constant(3) - kPi) < 1e-10);
    CHECK(std::abs(collision_rate_constant(2) - 2.0) < 1e-8);
    CHECK(std::abs(collision_rate_constant(3) - kPi) < 1e-10);
    CHECK(collision_rate_constant(2) == 0.5 * collision_constant_Cd(2));
    CHECK(collision_rate_constant(3) == 0.5 * collision_constant_Cd(3));

    const auto q = build_quadrature(3, 64);
    CHECK(std::abs(collision_constant_Cd(3, q) - 2.0 * kPi) < 1e-12);
    CHECK_THROWS_AS(collision_constant_Cd(2, q), std::invalid_argument);
    CHECK_THROWS_AS(collision_constant_Cd(4), std::invalid_argument);
}
