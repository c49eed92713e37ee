// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace lorentz {

/// Fixed-dimension point/velocity in R^d. Only d = 2 and d = 3 are used;
/// the dimension is a compile-time parameter so the hot loops carry no
/// runtime branching on d.
template <int d>
struct Vec {
    static_assert(d == 2 || d == 3, "only dimensions 2 and 3 are supported");

    std::array<double, d> c{};

    constexpr double& operator[](int i) { return c[static_cast<std::size_t>(i)]; }
    constexpr const double& operator[](int i) const { return c[static_cast<std::size_t>(i)]; }

    constexpr Vec& operator+=(const Vec& o) {
        for (int i = 0; i < d; ++i) c[i] += o.c[i];
        return *this;
    }
    constexpr Vec& operator-=(const Vec& o) {
        for (int i = 0; i < d; ++i) c[i] -= o.c[i];
        return *this;
    }
    constexpr Vec& operator*=(double s) {
        for (int i = 0; i < d; ++i) c[i] *= s;
        return *this;
    }

    friend constexpr Vec operator+(Vec a, const Vec& b) { return a += b; }
    friend constexpr Vec operator-(Vec a, const Vec& b) { return a -= b; }
    friend constexpr Vec operator*(Vec a, double s) { return a *= s; }
    friend constexpr Vec operator*(double s, Vec a) { return a *= s; }
    friend constexpr Vec operator-(Vec a) { return a *= -1.0; }

    friend constexpr bool operator==(const Vec& a, const Vec& b) { return a.c == b.c; }
};

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;

template <int d>
constexpr double dot(const Vec<d>& a, const Vec<d>& b) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += a.c[i] * b.c[i];
    return s;
}

template <int d>
constexpr double norm2(const Vec<d>& a) {
    return dot(a, a);
}

template <int d>
inline double norm(const Vec<d>& a) {
    return std::sqrt(norm2(a));
}

/// a / |a|. The caller guarantees |a| > 0.
template <int d>
inline Vec<d> normalized(const Vec<d>& a) {
    return a * (1.0 / norm(a));
}

inline Vec<3> cross(const Vec<3>& a, const Vec<3>& b) {
    return Vec<3>{a.c[1] * b.c[2] - a.c[2] * b.c[1], a.c[2] * b.c[0] - a.c[0] * b.c[2],
                  a.c[0] * b.c[1] - a.c[1] * b.c[0]};
}

/// Distance from point p to the closed segment [a, b].
template <int d>
inline double point_segment_distance(const Vec<d>& p, const Vec<d>& a, const Vec<d>& b) {
    const Vec<d> ab = b - a;
    const double len2 = norm2(ab);
    if (len2 == 0.0) return norm(p - a);
    double u = dot(p - a, ab) / len2;
    if (u < 0.0) u = 0.0;
    if (u > 1.0) u = 1.0;
    return norm(p - (a + u * ab));
}

}  // namespace lorentz
