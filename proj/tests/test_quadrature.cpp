// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "lorentz/quadrature.hpp"

using namespace lorentz;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("Gauss-Legendre: exactness for polynomials up to degree 2n-1") {
    std::vector<double> xs, ws;
    gauss_legendre(8, 0.0, 1.0, xs, ws);
    REQUIRE(xs.size() == 8);
    REQUIRE(ws.size() == 8);
    double wsum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(xs[i] > 0.0);
        CHECK(xs[i] < 1.0);
        CHECK(ws[i] > 0.0);
        wsum += ws[i];
    }
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));

    // Monomial moments on [0,1]: exact for degree <= 15 with n = 8.
    for (int k = 0; k <= 15; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) acc += ws[i] * std::pow(xs[i], k);
        CHECK(acc == doctest::Approx(1.0 / (k + 1)).epsilon(1e-13));
    }
}

TEST_CASE("Gauss-Legendre: general interval and smooth non-polynomial") {
    std::vector<double> xs, ws;
    gauss_legendre(24, -2.0, 5.0, xs, ws);
    double acc = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        acc += ws[i] * std::exp(-xs[i]);
        wsum += ws[i];
    }
    CHECK(wsum == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(acc == doctest::Approx(std::exp(2.0) - std::exp(-5.0)).epsilon(1e-13));
}

TEST_CASE("sphere quadrature d=2: |cos| first and cubed moments") {
    // The uniform-angle rule has the documented 4 pi^2 / (3 n^2) error floor
    // on |cos|; antiderivative oracles: integral of |cos| over the full
    // circle is 4, of |cos|^3 is 8/3.
    const auto q256 = build_quadrature(2, 256);
    double c1 = 0.0, c3 = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < q256.nodes.size(); ++i) {
        const double c = q256.nodes[i][0];
        c1 += q256.weights[i] * std::abs(c);
        c3 += q256.weights[i] * std::abs(c * c * c);
        wsum += q256.weights[i];
    }
    CHECK(wsum == doctest::Approx(2.0 * kPi).epsilon(1e-12));
    CHECK(std::abs(c1 - 4.0) < 13.2 / (256.0 * 256.0) * 1.5);
    CHECK(std::abs(c3 - 8.0 / 3.0) < 1e-3);

    // High order meets the 1e-8 constant tolerance.
    const auto q = build_quadrature(2, 65536);
    double c1h = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i)
        c1h += q.weights[i] * std::abs(q.nodes[i][0]);
    CHECK(std::abs(c1h - 4.0) < 1e-8);
}

TEST_CASE("sphere quadrature d=3: exact odd-cosine moments at low order") {
    const auto q = build_quadrature(3, 64);
    double c1 = 0.0, c3 = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        const double c = q.nodes[i][0];  // polar axis is e1
        c1 += q.weights[i] * std::abs(c);
        c3 += q.weights[i] * std::abs(c * c * c);
        wsum += q.weights[i];
    }
    // Surface 4 pi; |cos| integrates to 2 pi, |cos|^3 to pi (equator-split
    // Gauss-Legendre makes both exact to roundoff).
    CHECK(wsum == doctest::Approx(4.0 * kPi).epsilon(1e-13));
    CHECK(c1 == doctest::Approx(2.0 * kPi).epsilon(1e-12));
    CHECK(c3 == doctest::Approx(kPi).epsilon(1e-12));

    // Nodes live on the unit sphere.
    for (std::size_t i = 0; i < q.size(); ++i)
        CHECK(std::abs(norm2(q.node<3>(i)) - 1.0) < 1e-12);
}

TEST_CASE("quadrature input validation") {
    CHECK_THROWS_AS(build_quadrature(4, 16), std::invalid_argument);
    CHECK_THROWS_AS(build_quadrature(2, 0), std::invalid_argument);
    std::vector<double> xs, ws;
    CHECK_THROWS_AS(gauss_legendre(0, 0.0, 1.0, xs, ws), std::invalid_argument);
}
