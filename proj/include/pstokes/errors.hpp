#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pstokes/assembly.hpp"
#include "pstokes/solver.hpp"

// Space-time error norms of a discrete solution against the manufactured
// pair: the velocity error in L^2(I;L^2) plus the F-distance, both against
// the temporal nodal interpolant, and the pressure error in L^r(Omega_T).

namespace pstokes {

struct ErrorReport {
    double err_v = 0.0;          // L2(I;L2) part + F-distance part
    double err_v_l2 = 0.0;
    double err_v_f = 0.0;
    double err_q_lpprime = 0.0;
    double err_q_l2 = 0.0;
    double err_v_linf_l2 = 0.0;  // diagnostic: max_m of the spatial L2 error
};

inline ErrorReport compute_errors(const std::vector<DiscreteState>& states,
                                  const ManufacturedCase& mc, const TimeGrid& grid,
                                  const FeSystem& fe, const QuadratureRule& rule) {
    const double tau = grid.tau();
    const double pp = mc.params.p_conj();
    double acc_l2 = 0.0, acc_f = 0.0, acc_qp = 0.0, acc_q2 = 0.0, max_l2 = 0.0;

    for (const DiscreteState& st : states) {
        const double tm = st.t;
        double step_l2 = 0.0;
        for (int t = 0; t < static_cast<int>(fe.mesh->triangles.size()); ++t) {
            const auto nodes = fe.p2_nodes(t);
            const Triangle& tr = fe.mesh->triangles[t];
            for (const LocalQuadPoint& q : element_quadrature(fe, t, rule.triangle)) {
                Vec2 vh = Vec2::Zero();
                Mat2 grad_vh = Mat2::Zero();
                for (int a = 0; a < 6; ++a)
                    for (int c = 0; c < 2; ++c) {
                        const double coef = st.v[fe.velocity_dof(nodes[a], c)];
                        vh[c] += coef * q.n2[a];
                        grad_vh.row(c) += coef * q.g2[a].transpose();
                    }
                double qh = 0.0;
                for (int k = 0; k < 3; ++k) qh += st.q[tr.v[k]] * q.n1[k];

                // velocity terms: piecewise-constant state vs. nodal interpolant
                const Vec2 vex = exact_velocity(mc, tm, q.x);
                step_l2 += q.w * (vh - vex).squaredNorm();
                const Mat2 eps_ex = sym_part(exact_velocity_gradient(mc, tm, q.x));
                const Mat2 fdiff =
                    f_map(mc.params, sym_part(grad_vh)) - f_map(mc.params, eps_ex);
                acc_f += tau * q.w * fdiff.squaredNorm();

                // pressure terms: q(t) at the time-Gauss points
                for (const auto& [sg, wg] : rule.time) {
                    const double tg = tm - tau + sg * tau;
                    const double diff = std::abs(exact_pressure(mc, tg, q.x) - qh);
                    acc_qp += tau * wg * q.w * std::pow(diff, pp);
                    acc_q2 += tau * wg * q.w * diff * diff;
                }
            }
        }
        acc_l2 += tau * step_l2;
        max_l2 = std::max(max_l2, std::sqrt(step_l2));
    }

    ErrorReport rep;
    rep.err_v_l2 = std::sqrt(acc_l2);
    rep.err_v_f = std::sqrt(acc_f);
    rep.err_v = rep.err_v_l2 + rep.err_v_f;
    rep.err_q_lpprime = std::pow(acc_qp, 1.0 / pp);
    rep.err_q_l2 = std::sqrt(acc_q2);
    rep.err_v_linf_l2 = max_l2;
    return rep;
}

/// EOC_i = log(err_b / err_a) / log((tau_b + h_b) / (tau_a + h_a)).
inline double compute_eoc(double err_a, double err_b, double tau_a, double tau_b, double h_a,
                          double h_b) {
    if (!(err_a > 0.0) || !(err_b > 0.0))
        throw std::invalid_argument("compute_eoc: errors must be positive");
    return std::log(err_b / err_a) / std::log((tau_b + h_b) / (tau_a + h_a));
}

}  // namespace pstokes
