#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

// Power-law constitutive law S(A) = nu0 (delta + |A^sym|)^{p-2} A^sym,
// the associated nonlinear distance map F, and the shifted N-function
// family phi_a with its Fenchel conjugate.  All tensor arguments are 2x2;
// |.| is the Frobenius norm.

namespace pstokes {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

struct PowerLawParams {
    double nu0 = 1.0;
    double delta = 1.0e-5;
    double p = 1.5;

    double p_conj() const { return p / (p - 1.0); }

    void validate() const {
        if (!(nu0 > 0.0)) throw std::invalid_argument("nu0 must be positive");
        if (!(delta >= 0.0)) throw std::invalid_argument("delta must be nonnegative");
        if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1");
    }
};

inline Mat2 sym_part(const Mat2& a) { return 0.5 * (a + a.transpose()); }

inline double frobenius(const Mat2& a) { return a.norm(); }

/// S(A) = nu0 (delta + |A^sym|)^{p-2} A^sym, extended by 0 at A^sym = 0.
inline Mat2 stress(const PowerLawParams& pl, const Mat2& a) {
    const Mat2 as = sym_part(a);
    const double mag = frobenius(as);
    if (mag == 0.0) return Mat2::Zero();
    return pl.nu0 * std::pow(pl.delta + mag, pl.p - 2.0) * as;
}

/// Gateaux derivative D_A S(A)[B].  At the nonsmooth point (delta = 0,
/// p < 2, A^sym = 0) the derivative does not exist.
inline Mat2 stress_derivative(const PowerLawParams& pl, const Mat2& a, const Mat2& b) {
    const Mat2 as = sym_part(a);
    const Mat2 bs = sym_part(b);
    const double mag = frobenius(as);
    if (mag == 0.0) {
        if (pl.delta == 0.0 && pl.p < 2.0)
            throw std::domain_error("stress_derivative: nonsmooth point");
        return pl.nu0 * std::pow(pl.delta + mag, pl.p - 2.0) * bs;
    }
    const double pref = std::pow(pl.delta + mag, pl.p - 2.0);
    const double inner = (as.array() * bs.array()).sum();
    const double pref2 = (pl.p - 2.0) * std::pow(pl.delta + mag, pl.p - 3.0) * inner / mag;
    return pl.nu0 * (pref * bs + pref2 * as);
}

/// F(A) = (delta + |A^sym|)^{(p-2)/2} A^sym.
inline Mat2 f_map(const PowerLawParams& pl, const Mat2& a) {
    const Mat2 as = sym_part(a);
    const double mag = frobenius(as);
    if (mag == 0.0) return Mat2::Zero();
    return std::pow(pl.delta + mag, 0.5 * (pl.p - 2.0)) * as;
}

/// phi_a'(t) = (delta + a + t)^{p-2} t.
inline double phi_shifted_prime(const PowerLawParams& pl, double a, double t) {
    return std::pow(pl.delta + a + t, pl.p - 2.0) * t;
}

/// phi_a(t), via the closed-form antiderivative of phi_a'.  With
/// c = delta + a and u = c + s the integrand splits as u^{p-1} - c u^{p-2},
/// giving phi_a(t) = [u^p/p - c u^{p-1}/(p-1)]_{u=c}^{u=c+t}.
inline double phi_shifted(const PowerLawParams& pl, double a, double t) {
    if (t <= 0.0) return 0.0;
    const double c = pl.delta + a;
    const double p = pl.p;
    if (c == 0.0) return std::pow(t, p) / p;
    const double u = c + t;
    return (std::pow(u, p) - std::pow(c, p)) / p
         - c * (std::pow(u, p - 1.0) - std::pow(c, p - 1.0)) / (p - 1.0);
}

inline double phi(const PowerLawParams& pl, double t) { return phi_shifted(pl, 0.0, t); }

/// (phi_a)*(s) = sup_t { s t - phi_a(t) }.  phi_a' is strictly increasing,
/// so the supremum sits at the unique root of phi_a'(t) = s, located by
/// bisection-safeguarded Newton.
inline double phi_shifted_conjugate(const PowerLawParams& pl, double a, double s) {
    if (s <= 0.0) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    while (phi_shifted_prime(pl, a, hi) < s) {
        hi *= 2.0;
        if (hi > 1e300) break;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = phi_shifted_prime(pl, a, t) - s;
        if (f > 0.0) hi = t; else lo = t;
        const double c = pl.delta + a;
        // d/dt phi_a'(t) = (c+t)^{p-3} (c + (p-1) t)
        const double df = std::pow(c + t, pl.p - 3.0) * (c + (pl.p - 1.0) * t);
        double tn = t - f / df;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) <= 1e-15 * (1.0 + std::abs(t))) { t = tn; break; }
        t = tn;
    }
    return s * t - phi_shifted(pl, a, t);
}

/// Quadrature modular rho_{phi_a}(v) = sum_k w_k phi_{a_k}(|v_k|) for fields
/// sampled at a common quadrature set.
inline double modular(const PowerLawParams& pl, std::span<const double> shift,
                      std::span<const double> magnitude, std::span<const double> weight) {
    if (shift.size() != magnitude.size() || shift.size() != weight.size())
        throw std::invalid_argument("modular: mismatched sample counts");
    double acc = 0.0;
    for (std::size_t k = 0; k < shift.size(); ++k)
        acc += weight[k] * phi_shifted(pl, shift[k], magnitude[k]);
    return acc;
}

}  // namespace pstokes
