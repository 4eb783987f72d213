#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

#include "pstokes/nfunction.hpp"

// Manufactured solution family on (0,1)^2: a rotational velocity field with
// a radial power at the origin and a radially singular zero-mean pressure.
// The forcing is the pointwise strong residual f = d_t v - div S + grad q,
// realized as the volume weak residual of the exact pair plus the boundary
// traction load (q I - S(eps v)) n; the pair does not satisfy impermeability
// or zero tangential traction, so the boundary term is genuinely present.

namespace pstokes {

namespace detail {

template <class F>
double adaptive_simpson(const F& f, double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
         + adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate_adaptive(const F& f, double a, double b, double tol) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace detail

/// Mean of |x|^beta over the unit square, by polar coordinates: the radial
/// integral is exact, the angular one is smooth on each half of the square
/// and evaluated adaptively (relative tolerance ~1e-12).
inline double radial_power_mean(double beta) {
    if (beta + 2.0 <= 0.0) throw std::invalid_argument("radial_power_mean: non-integrable power");
    const double e = beta + 2.0;
    auto f = [e](double theta) { return std::pow(std::cos(theta), -e); };
    const double quarter = detail::integrate_adaptive(f, 0.0, std::atan(1.0), 1e-14);
    return 2.0 * quarter / e;
}

struct ManufacturedCase {
    PowerLawParams params;
    double alpha = 1.0;
    double c_q = 1.0e-3;
    double T = 0.1;
    double beta_v = 0.0;
    double beta_q = 0.0;
    double q_mean = 0.0;

    ManufacturedCase() = default;
    ManufacturedCase(const PowerLawParams& pl, double alpha_, double c_q_, double T_ = 0.1)
        : params(pl), alpha(alpha_), c_q(c_q_), T(T_) {
        params.validate();
        beta_v = 2.0 * (alpha - 1.0) / params.p + 1.0e-2;
        beta_q = alpha - 2.0 / params.p_conj() + 1.0e-2;
        q_mean = radial_power_mean(beta_q);
    }
};

/// v(t,x) = t |x|^{beta_v} (x2, -x1).
inline Vec2 exact_velocity(const ManufacturedCase& mc, double t, const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) return Vec2::Zero();
    return t * std::pow(r, mc.beta_v) * Vec2(x.y(), -x.x());
}

inline Vec2 exact_velocity_dt(const ManufacturedCase& mc, double /*t*/, const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) return Vec2::Zero();
    return std::pow(r, mc.beta_v) * Vec2(x.y(), -x.x());
}

/// (grad v)_{ij} = dv_i/dx_j; singular at the origin for beta_v < 1.
inline Mat2 exact_velocity_gradient(const ManufacturedCase& mc, double t, const Vec2& x) {
    const double r = x.norm();
    if (r == 0.0) {
        if (mc.beta_v < 1.0) throw std::domain_error("exact_velocity_gradient: singular point");
        return Mat2::Zero();
    }
    const double b = mc.beta_v;
    const double rb = std::pow(r, b);
    const Vec2 w(x.y(), -x.x());
    Mat2 g;
    // b r^{b-2} x_j w_i + r^b dw_i/dx_j
    const double c = b * std::pow(r, b - 2.0);
    g(0, 0) = c * x.x() * w.x();
    g(0, 1) = c * x.y() * w.x() + rb;
    g(1, 0) = c * x.x() * w.y() - rb;
    g(1, 1) = c * x.y() * w.y();
    return t * g;
}

inline double exact_pressure(const ManufacturedCase& mc, double t, const Vec2& x) {
    return t * mc.c_q * (std::pow(x.norm(), mc.beta_q) - mc.q_mean);
}

/// Pointwise integrand of the weak-residual forcing
/// L(t)(xi) = (d_t v, xi) + (S(eps(v)), eps(xi)) - (q, div xi).
inline double rhs_functional(const ManufacturedCase& mc, double t, const Vec2& x,
                             const Vec2& xi, const Mat2& eps_xi, double div_xi) {
    const Vec2 vt = exact_velocity_dt(mc, t, x);
    const Mat2 eps_v = sym_part(exact_velocity_gradient(mc, t, x));
    const Mat2 s = stress(mc.params, eps_v);
    const double q = exact_pressure(mc, t, x);
    return vt.dot(xi) + (s.array() * eps_xi.array()).sum() - q * div_xi;
}

inline double exact_normal_data(const ManufacturedCase& mc, double t, const Vec2& x,
                                const Vec2& n) {
    return exact_velocity(mc, t, x).dot(n);
}

}  // namespace pstokes
