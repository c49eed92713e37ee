// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include "lorentz/lemmas.hpp"

#include <cmath>

namespace lorentz {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_to_pi_band(double a) {
    // Reduce an angle to (-pi, pi].
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

}  // namespace

double appendix_f(double theta0, double theta, double u2, double r) {
    Restitution rr(r);
    if (!(u2 >= 0.0)) throw std::domain_error("u2 must be nonnegative");

    // Convention: sin(theta0) >= 0 (orientation of the (v, sigma) plane). A
    // global reflection flips both sines and leaves the product invariant,
    // and the joint map (theta0, theta) -> (pi - theta0, pi - theta) is a
    // symmetry as well; use them to move theta0 into [pi/2, pi].
    theta0 = wrap_to_pi_band(theta0);
    theta = wrap_to_pi_band(theta);
    if (theta0 < 0.0) {
        theta0 = -theta0;
        theta = -theta;
    }
    if (theta0 < 0.5 * kPi) {
        theta0 = kPi - theta0;
        theta = wrap_to_pi_band(kPi - theta);
    }

    const double c0 = std::cos(theta0);
    const double s0 = std::sin(theta0);  // >= 0 after reduction
    const double c = std::cos(theta);
    const double rest = 1.0 - u2 - c * c;
    if (rest < -1e-12) throw std::domain_error("u2 + cos^2(theta) exceeds 1");
    const double sgn = theta > 0.0 ? 1.0 : (theta < 0.0 ? -1.0 : 0.0);  // sign of sin(theta)
    const double sigma_dot_omega = c0 * c + s0 * sgn * std::sqrt(std::max(0.0, rest));

    const double opr = 1.0 + r;
    const double num = 1.0 - opr * c0 * c0 - opr * c * c + opr * opr * c0 * c * sigma_dot_omega;
    const double den = std::sqrt((1.0 - (1.0 - r * r) * c0 * c0) *
                                 (1.0 - (1.0 - r * r) * c * c));
    return num / den;
}

double appendix_theta1(double theta0, double r) {
    Restitution rr(r);
    // Mirror to the sin(theta0) >= 0 representative and mirror the answer
    // back; the closed form below is band-independent otherwise.
    theta0 = wrap_to_pi_band(theta0);
    double flip = 1.0;
    if (theta0 < 0.0) {
        theta0 = -theta0;
        flip = -1.0;
    }
    const double c0 = std::cos(theta0);
    const double s0 = std::sin(theta0);
    const double den = std::sqrt(r * r * c0 * c0 + s0 * s0);
    return flip * std::atan2(-r * c0 / den, s0 / den);
}

}  // namespace lorentz
