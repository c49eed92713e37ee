// lorentz — inelastic Lorentz gas simulation and kinetic series toolkit
// SPDX-License-Identifier: MIT
#include "lorentz/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lorentz {

namespace detail {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Chebyshev–Lobatto grid on [a, b] (descending: x[0] = b, x[n] = a) with
/// the standard barycentric weights (-1)^i, halved at the two ends.
struct Lobatto {
    std::vector<double> x;
    std::vector<double> bw;
};

Lobatto lobatto(int n, double a, double b) {
    Lobatto g;
    g.x.resize(static_cast<std::size_t>(n) + 1);
    g.bw.resize(static_cast<std::size_t>(n) + 1);
    const double pi = 0.5 * kTwoPi;
    for (int i = 0; i <= n; ++i) {
        g.x[static_cast<std::size_t>(i)] =
            0.5 * (a + b) + 0.5 * (b - a) * std::cos(pi * i / n);
        g.bw[static_cast<std::size_t>(i)] =
            (i % 2 == 0 ? 1.0 : -1.0) * (i == 0 || i == n ? 0.5 : 1.0);
    }
    return g;
}

/// row such that p(q) = sum_i row[i] f(x_i) for the interpolant through the
/// grid values. Exact node hits short-circuit to an indicator row.
std::vector<double> bary_row(const Lobatto& g, double q) {
    const std::size_t n = g.x.size();
    std::vector<double> row(n, 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = q - g.x[i];
        if (dx == 0.0) {
            std::fill(row.begin(), row.end(), 0.0);
            row[i] = 1.0;
            return row;
        }
        row[i] = g.bw[i] / dx;
        denom += row[i];
    }
    for (auto& c : row) c /= denom;
    return row;
}

}  // namespace

std::vector<double> speed_marginal_terms(const std::function<double(double)>& h, double t,
                                         double s0, int d, double r, int K_max) {
    if (K_max < 0) return {};
    Restitution rr(r);
    const double nu = collision_rate_constant(d);
    std::vector<double> terms(static_cast<std::size_t>(K_max) + 1, 0.0);
    terms[0] = std::exp(-nu * s0 * t) * h(s0);
    if (K_max == 0 || t == 0.0 || s0 == 0.0) return terms;

    // Picard iteration of the speed-marginal mild form
    //   psi_K(tau, s) = e^{-nu s tau} h(s)
    //                 + nu s int_0^tau e^{-nu s (tau-u)} E_q[psi_{K-1}](u, s q) du,
    // collocated on a Chebyshev–Lobatto grid in (tau, log s). The post-speed
    // factor q covers [r, 1]; the grid floor sits far enough below s0 that
    // clamping sub-grid queries is below the target accuracy.
    constexpr int Nt = 32;  // tau grid order
    constexpr int Ns = 48;  // log-speed grid order
    constexpr int Nu = 24;  // GL points per time integral
    constexpr int Nw = 20;  // GL points per kernel panel

    const double L = std::max((K_max + 2) * std::log(1.0 / r), 25.0);
    const Lobatto tau = lobatto(Nt, 0.0, t);
    const Lobatto zg = lobatto(Ns, std::log(s0) - L, std::log(s0));
    std::vector<double> s_node(Ns + 1), h_node(Ns + 1);
    for (int j = 0; j <= Ns; ++j) {
        s_node[static_cast<std::size_t>(j)] = std::exp(zg.x[static_cast<std::size_t>(j)]);
        h_node[static_cast<std::size_t>(j)] = h(s_node[static_cast<std::size_t>(j)]);
    }

    // Jump kernel as a matrix against the grid values:
    //   E_q[psi](u, s_j) = sum_m Kmat[j][m] psi(u, s-node m).
    // d=2: q = sqrt(r^2 + (1-r^2) w^2); d=3: q = sqrt(r^2 + (1-r^2) w),
    // w ~ U(0,1); the integral is split where q's curvature concentrates.
    const double c_split = std::clamp(d == 2 ? r : r * r, 0.05, 0.5);
    std::vector<double> wn, wa, pn, pa;
    gauss_legendre(Nw, 0.0, c_split, wn, wa);
    gauss_legendre(Nw, c_split, 1.0, pn, pa);
    wn.insert(wn.end(), pn.begin(), pn.end());
    wa.insert(wa.end(), pa.begin(), pa.end());

    std::vector<std::vector<double>> Kmat(Ns + 1, std::vector<double>(Ns + 1, 0.0));
    for (int j = 0; j <= Ns; ++j) {
        for (std::size_t n = 0; n < wn.size(); ++n) {
            const double w = wn[n];
            const double q = d == 2 ? std::sqrt(r * r + (1.0 - r * r) * w * w)
                                    : std::sqrt(r * r + (1.0 - r * r) * w);
            double zq = zg.x[static_cast<std::size_t>(j)] + std::log(q);
            if (zq < zg.x[Ns]) zq = zg.x[Ns];
            const auto row = bary_row(zg, zq);
            for (int m = 0; m <= Ns; ++m)
                Kmat[static_cast<std::size_t>(j)][static_cast<std::size_t>(m)] +=
                    wa[n] * row[static_cast<std::size_t>(m)];
        }
    }

    // Per-tau-node time rules, tau-interpolation rows and decay factors are
    // iteration-independent; precompute them once.
    const std::size_t nt1 = Nt + 1, ns1 = Ns + 1;
    std::vector<double> ucoef(static_cast<std::size_t>(Nt) * Nu * nt1);
    std::vector<double> decay(static_cast<std::size_t>(Nt) * Nu * ns1);
    {
        std::vector<double> un, uw;
        for (int i = 0; i < Nt; ++i) {
            gauss_legendre(Nu, 0.0, tau.x[static_cast<std::size_t>(i)], un, uw);
            for (int m = 0; m < Nu; ++m) {
                const auto row = bary_row(tau, un[static_cast<std::size_t>(m)]);
                for (std::size_t ip = 0; ip < nt1; ++ip)
                    ucoef[(static_cast<std::size_t>(i) * Nu + m) * nt1 + ip] = row[ip];
                for (std::size_t j = 0; j < ns1; ++j)
                    decay[(static_cast<std::size_t>(i) * Nu + m) * ns1 + j] =
                        uw[static_cast<std::size_t>(m)] *
                        std::exp(-nu * s_node[j] *
                                 (tau.x[static_cast<std::size_t>(i)] -
                                  un[static_cast<std::size_t>(m)]));
            }
        }
    }

    std::vector<double> prev(nt1 * ns1), next(nt1 * ns1);
    for (std::size_t i = 0; i < nt1; ++i)
        for (std::size_t j = 0; j < ns1; ++j)
            prev[i * ns1 + j] = std::exp(-nu * s_node[j] * tau.x[i]) * h_node[j];
    double prev_val = prev[0];

    std::vector<double> psi_u(ns1), qv(ns1), integ(ns1);
    for (int K = 1; K <= K_max; ++K) {
        for (int i = 0; i < Nt; ++i) {
            std::fill(integ.begin(), integ.end(), 0.0);
            for (int m = 0; m < Nu; ++m) {
                const double* crow = &ucoef[(static_cast<std::size_t>(i) * Nu + m) * nt1];
                for (std::size_t j = 0; j < ns1; ++j) {
                    double acc = 0.0;
                    for (std::size_t ip = 0; ip < nt1; ++ip)
                        acc += crow[ip] * prev[ip * ns1 + j];
                    psi_u[j] = acc;
                }
                for (std::size_t j = 0; j < ns1; ++j) {
                    double acc = 0.0;
                    const auto& krow = Kmat[j];
                    for (std::size_t z = 0; z < ns1; ++z) acc += krow[z] * psi_u[z];
                    qv[j] = acc;
                }
                const double* drow = &decay[(static_cast<std::size_t>(i) * Nu + m) * ns1];
                for (std::size_t j = 0; j < ns1; ++j) integ[j] += drow[j] * qv[j];
            }
            for (std::size_t j = 0; j < ns1; ++j)
                next[static_cast<std::size_t>(i) * ns1 + j] =
                    std::exp(-nu * s_node[j] * tau.x[static_cast<std::size_t>(i)]) * h_node[j] +
                    nu * s_node[j] * integ[j];
        }
        for (std::size_t j = 0; j < ns1; ++j) next[static_cast<std::size_t>(Nt) * ns1 + j] =
            h_node[j];  // tau = 0
        terms[static_cast<std::size_t>(K)] = next[0] - prev_val;
        prev_val = next[0];
        std::swap(prev, next);
    }
    return terms;
}

double log_duhamel_term_bound(int k, double t, double s0, int d, double r, double alpha,
                              double p, double M0) {
    const double decay0 = collision_rate_constant(d) * s0 * t;
    if (k == 0) return std::log(M0) - alpha * std::pow(s0, p) - decay0;
    if (t == 0.0 || s0 == 0.0) return -kInf;

    // Split-sum bound: each k-term is cut by how many of its k contact
    // angles have |cos| above a cutoff beta_{k,s}; "large" impacts (s of
    // them) buy exponential-moment decay via q_beta^s speed growth, "small"
    // impacts are bounded by beta^{k-s}. The gain kernel here carries
    // |v.omega|/2, hence the halved C.
    const double logC = std::log(sphere_surface(d) * s0 * t / (2.0 * r * r));
    const double lr = std::log(1.0 / r);
    const double s0p = std::pow(s0, p);
    std::vector<double> ls(static_cast<std::size_t>(k) + 1);
    for (int s = 0; s <= k; ++s) {
        double logbeta;
        if (s == 0)
            logbeta = -std::log(static_cast<double>(k));
        else if (s == k)
            logbeta = std::log(0.5);
        else
            logbeta = -std::log(static_cast<double>(k - s)) - lr * s * (s + 1.0);
        const double beta2 = std::exp(2.0 * logbeta);
        const double logq = 0.5 * std::log1p((1.0 / (r * r) - 1.0) * beta2);
        const double spq = static_cast<double>(s) * p * logq;
        const double qsp = spq > 700.0 ? kInf : std::exp(spq);
        const double km_s = static_cast<double>(k - s);
        ls[static_cast<std::size_t>(s)] = -std::lgamma(s + 1.0) - std::lgamma(km_s + 1.0) +
                                          k * logC + static_cast<double>(k) * s * lr +
                                          0.5 * km_s * km_s * logq + km_s * logbeta -
                                          alpha * qsp * s0p;
    }
    double peak = -kInf;
    for (double v : ls) peak = std::max(peak, v);
    if (peak == -kInf) return -kInf;
    double sum = 0.0;
    for (double v : ls) sum += std::exp(v - peak);
    return std::log(M0) - decay0 + peak + std::log(sum);
}

double duhamel_tail_bound(int K, double t, double s0, int d, double r, double alpha, double p,
                          double M0) {
    double total = 0.0, bmax = 0.0;
    for (int k = K + 1; k <= K + 600; ++k) {
        const double lb = log_duhamel_term_bound(k, t, s0, d, r, alpha, p, M0);
        if (lb > 700.0) return kInf;
        const double b = std::exp(lb);
        total += b;
        bmax = std::max(bmax, b);
        if (b < bmax && b < 1e-18 * (total + 1e-300)) break;
    }
    return total;
}

}  // namespace detail

double haff_energy_bound(double E0, double r, int d, double t, const SphereQuadrature& quad) {
    if (E0 < 0.0) throw std::invalid_argument("initial energy must be nonnegative");
    if (t < 0.0) throw std::invalid_argument("negative time");
    Restitution rr(r);
    if (E0 == 0.0) return 0.0;
    if (r == 1.0) return E0;
    // Cooling constant: d/dt E[s^2] = -(1-r^2) K_d E[s^3] with K_d the
    // hemisphere cubed-cosine moment; Cauchy–Schwarz (E[s^3] >= E[s^2]^{3/2}
    // for a mass-1 law) closes the one-sided comparison to an explicit decay.
    const double K = 0.5 * cubed_cosine_constant(d, quad);
    const double c = 0.5 * (1.0 - r * r) * K;
    const double root = 1.0 / std::sqrt(E0) + c * t;
    return 1.0 / (root * root);
}

double haff_energy_bound(double E0, double r, int d, double t) {
    if (E0 < 0.0) throw std::invalid_argument("initial energy must be nonnegative");
    if (t < 0.0) throw std::invalid_argument("negative time");
    Restitution rr(r);
    if (E0 == 0.0) return 0.0;
    if (r == 1.0) return E0;
    const double K = 0.5 * cubed_cosine_constant(d);
    const double c = 0.5 * (1.0 - r * r) * K;
    const double root = 1.0 / std::sqrt(E0) + c * t;
    return 1.0 / (root * root);
}

}  // namespace lorentz
