// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "lorentz/lemmas.hpp"

using namespace lorentz;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("tube volume: closed forms and spec validation") {
    CHECK(straight_tube_volume<2>(2.0, 0.1) ==
          doctest::Approx(2.0 * 0.1 * 2.0 + kPi * 0.01).epsilon(1e-15));
    CHECK(straight_tube_volume<3>(2.0, 0.1) ==
          doctest::Approx(kPi * 0.01 * 2.0 + (4.0 / 3.0) * kPi * 0.001).epsilon(1e-15));

    TubeSpec<2> spec;
    spec.waypoints = {Vec2{{0, 0}}, Vec2{{1, 0}}, Vec2{{1, 1}}};
    spec.eps = 0.0;
    CHECK_THROWS_WITH(spec.validate(), "tube eps must be positive");
    spec.eps = 0.1;
    CHECK_NOTHROW(spec.validate());
    spec.waypoints[2] = spec.waypoints[0];
    CHECK_THROWS_WITH(spec.validate(), "tube waypoints must be pairwise distinct");
    spec.waypoints[2] = Vec2{{1, 1}};
    CHECK_THROWS_WITH(tube_volume_mc(spec, 10), "tube volume needs at least 1e3 samples");
}

TEST_CASE("tube volume: Monte Carlo matches closed forms") {
    // Collinear waypoints: the union is a straight tube.
    TubeSpec<2> straight;
    straight.waypoints = {Vec2{{0, 0}}, Vec2{{0.7, 0}}, Vec2{{1.5, 0}}};
    straight.eps = 0.12;
    const auto est = tube_volume_mc(straight, 400000);
    CHECK(std::abs(est.mean - straight_tube_volume<2>(1.5, 0.12)) <= 4.0 * est.std_error);

    // Thread count does not move the estimate.
    const auto est3 = tube_volume_mc(straight, 400000, 0x7BEULL, 3);
    CHECK(est3.mean == est.mean);

    // Folded back on itself: the second leg retraces part of the first, so
    // the union is the straight tube over the longer leg alone.
    TubeSpec<2> folded;
    folded.waypoints = {Vec2{{0, 0}}, Vec2{{1.2, 0}}, Vec2{{0.5, 0}}};
    folded.eps = 0.12;
    const auto fest = tube_volume_mc(folded, 400000);
    CHECK(std::abs(fest.mean - straight_tube_volume<2>(1.2, 0.12)) <= 4.0 * fest.std_error);

    // d = 3 straight tube.
    TubeSpec<3> s3;
    s3.waypoints = {Vec3{{0, 0, 0}}, Vec3{{0.5, 0, 0}}, Vec3{{1.0, 0, 0}}};
    s3.eps = 0.15;
    const auto est3d = tube_volume_mc(s3, 400000);
    CHECK(std::abs(est3d.mean - straight_tube_volume<3>(1.0, 0.15)) <= 4.0 * est3d.std_error);
}

TEST_CASE("tube sweep: the aligned tube has maximal volume") {
    for (int dim = 2; dim <= 3; ++dim) {
        TubeSweepReport rep = dim == 2 ? verify_tube_lemma<2>(1.0, 1.0, 0.1, 9, 200000)
                                       : verify_tube_lemma<3>(1.0, 1.0, 0.1, 9, 200000);
        REQUIRE(rep.rows.size() == 9);
        CHECK(rep.rows.front().angle == 0.0);
        CHECK(rep.rows.back().angle == doctest::Approx(kPi).epsilon(1e-15));
        CHECK(rep.aligned_maximal);
        CHECK(rep.closed_form_matched);
        CHECK(rep.worst_violation_sigmas < 4.0);

        // Folding all the way back strictly loses volume (one leg's worth),
        // and the folded tube is exactly the single-leg tube.
        const auto& aligned = rep.rows.front().volume;
        const auto& fold = rep.rows.back().volume;
        CHECK(aligned.mean - fold.mean > 4.0 * (aligned.std_error + fold.std_error));
        const double single = dim == 2 ? straight_tube_volume<2>(1.0, 0.1)
                                       : straight_tube_volume<3>(1.0, 0.1);
        CHECK(std::abs(fold.mean - single) <= 4.0 * fold.std_error);
    }

    // The right-angle deficit in the plane has an exact inclusion-exclusion
    // value: the joint overlap of two perpendicular stadiums is a square plus
    // three quarter-discs, eps^2 + 3 pi eps^2 / 4, replacing the aligned
    // joint ball pi eps^2.
    {
        const auto rep = verify_tube_lemma<2>(1.0, 1.0, 0.1, 9, 400000);
        const double eps = 0.1;
        const double expect =
            2.0 * straight_tube_volume<2>(1.0, eps) - eps * eps - 0.75 * kPi * eps * eps;
        CHECK(rep.rows[4].angle == doctest::Approx(kPi / 2.0).epsilon(1e-15));
        const auto& bent = rep.rows[4].volume;
        CHECK(std::abs(bent.mean - expect) <= 4.0 * bent.std_error);
    }

    CHECK_THROWS_WITH((verify_tube_lemma<2>(0.0, 1.0, 0.1, 4, 2000)),
                      "tube lengths and eps must be positive");
    CHECK_THROWS_WITH((verify_tube_lemma<2>(1.0, 1.0, 0.1, 1, 2000)),
                      "need at least 2 sweep angles");
}

TEST_CASE("scattering alignment function: endpoint identities") {
    // f(theta0, theta0, 0, r) = 1: omega = sigma gives the same direction.
    // f(theta0, theta1(theta0, r), 0, r) = -1: the closed-form antipode.
    for (int i = 1; i < 50; ++i) {
        const double theta0 = kPi * i / 50.0;
        for (double r : {0.3, 0.5, 0.9}) {
            CHECK(appendix_f(theta0, theta0, 0.0, r) == doctest::Approx(1.0).epsilon(1e-10));
            const double th1 = appendix_theta1(theta0, r);
            CHECK(appendix_f(theta0, th1, 0.0, r) == doctest::Approx(-1.0).epsilon(1e-10));
        }
    }
    // theta1 at theta0 = pi/2 is 0: hitting head-on reverses the velocity.
    CHECK(appendix_theta1(kPi / 2.0, 0.7) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_THROWS_AS(appendix_f(1.0, 0.5, -0.1, 0.5), std::domain_error);
    CHECK_THROWS_AS(appendix_f(1.0, 0.1, 1.0, 0.5), std::domain_error);
}

TEST_CASE("scattering alignment function: matches raw vectors in d = 3") {
    // Rebuild the appendix coordinates from scratch: frame e1 = v_hat, e2 the
    // in-plane direction of sigma, e3 = e1 x e2; theta0 and theta are polar
    // angles in that frame and u2 the squared out-of-plane part of omega.
    // The function must reproduce the scalar product of the two normalized
    // scattered velocities.
    Stream rng(stream_key(0xF3A7ULL, 5));
    int tested = 0;
    for (int trial = 0; trial < 20000 && tested < 10000; ++trial) {
        const double r = rng.uniform(0.2, 1.0);
        Vec3 v = sample_unit_sphere<3>(rng);
        v = rng.uniform(0.5, 2.0) * v;  // the identity is scale-invariant
        const Vec3 sigma = sample_unit_sphere<3>(rng);
        const Vec3 omega = sample_unit_sphere<3>(rng);

        const Vec3 e1 = normalized(v);
        Vec3 e2 = sigma - dot(sigma, e1) * e1;
        const double s0 = norm(e2);
        if (s0 < 1e-3) continue;  // sigma ~ parallel to v: frame ill-defined
        e2 = (1.0 / s0) * e2;
        const Vec3 e3{{e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2],
                       e1[0] * e2[1] - e1[1] * e2[0]}};

        const double theta0 = std::atan2(s0, dot(sigma, e1));
        // theta is the full (v, omega) angle — cos(theta) = omega . e1 — with
        // its sign carrying which side of the (v, sigma) plane omega leans to.
        const double theta =
            std::copysign(std::acos(std::clamp(dot(omega, e1), -1.0, 1.0)), dot(omega, e2));
        const double u = dot(omega, e3);

        const double via_f = appendix_f(theta0, theta, u * u, r);
        const double direct = dot(normalized(scatter(v, omega, Restitution(r))),
                                  normalized(scatter(v, sigma, Restitution(r))));
        CHECK(via_f == doctest::Approx(direct).epsilon(1e-10));
        ++tested;
    }
    CHECK(tested == 10000);
}

TEST_CASE("almost-colinear scattering measure: decay identifies the dimension") {
    // The aligned set is a union of arcs of width ~sqrt(delta) in d = 2 and
    // of caps of area ~delta in d = 3; quartering delta should halve the
    // measure in the plane and quarter it in space.
    const double delta = 0.01;
    const Vec2 v2{{1.0, 0.4}};
    const Vec2 p2 = normalized(Vec2{{0.3, -1.0}});
    for (double r : {0.5, 1.0}) {
        const auto m = colinearity_pathological_measure<2>(v2, p2, delta, Restitution(r), 200000);
        const auto mq =
            colinearity_pathological_measure<2>(v2, p2, delta / 4.0, Restitution(r), 200000);
        CHECK(m.mean > 20.0 * m.std_error);
        const double ratio = m.mean / mq.mean;
        CHECK(ratio >= 2.0 / 1.2);
        CHECK(ratio <= 2.0 * 1.2);
    }

    const Vec3 v3{{1.0, 0.4, -0.2}};
    const Vec3 p3 = normalized(Vec3{{0.3, -1.0, 0.5}});
    for (double r : {0.5, 1.0}) {
        const auto m = colinearity_pathological_measure<3>(v3, p3, delta, Restitution(r), 200000);
        const auto mq =
            colinearity_pathological_measure<3>(v3, p3, delta / 4.0, Restitution(r), 200000);
        CHECK(m.mean > 10.0 * m.std_error);
        const double ratio = m.mean / mq.mean;
        CHECK(ratio >= 3.0);  // clearly steeper than the planar rate 2
        CHECK(ratio <= 4.0 * 1.2);
    }

    const Restitution r(0.5);
    CHECK_THROWS_WITH((colinearity_pathological_measure<2>(v2, p2, 0.0, r, 1000)),
                      "delta must be in (0,1]");
    CHECK_THROWS_WITH((colinearity_pathological_measure<2>(v2, p2, 1.5, r, 1000)),
                      "delta must be in (0,1]");
    CHECK_THROWS_WITH((colinearity_pathological_measure<2>(Vec2{}, p2, 0.1, r, 1000)),
                      "zero velocity");
    CHECK_THROWS_WITH((colinearity_pathological_measure<2>(v2, Vec2{{1.0, 1.0}}, 0.1, r, 1000)),
                      "p must be a unit vector");
    CHECK_THROWS_WITH((colinearity_pathological_measure<2>(v2, p2, 0.1, r, 1)),
                      "need at least 2 samples");
}
