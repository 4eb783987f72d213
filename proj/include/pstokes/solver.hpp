#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pstokes/assembly.hpp"

// Backward-Euler time marching with a Newton solve of the coupled
// saddle-point system (velocity, pressure, boundary multiplier, zero-mean
// border) at every step.  Linearized systems go to a sparse direct solver.

namespace pstokes {

struct TimeGrid {
    double T = 0.1;
    int M = 4;
    double tau() const { return T / M; }
    double node(int m) const { return tau() * m; }
};

struct DiscreteState {
    Vector v;
    Vector q;
    Vector lam;
    double t = 0.0;
    int step_index = 0;
};

struct NewtonOptions {
    double tol_abs = 1.0e-10;
    double tol_rel = 1.0e-8;
    // the cold-started first step of a degenerate law (p < 2, small delta)
    // creeps for ~60 iterations before entering the quadratic regime
    int max_iter = 200;
    int max_halvings = 10;
};

struct StepStats {
    int step = 0;
    int newton_iterations = 0;
    double residual = 0.0;
};

/// Sparse direct solve with a relative residual check (<= 1e-10) and one
/// step of iterative refinement if violated.
inline Vector solve_saddle_linear(const SpMat& a, const Vector& b) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("singular linear system");
    Vector x = lu.solve(b);
    const double bnorm = b.norm();
    if (bnorm > 0.0 && (a * x - b).norm() / bnorm > 1e-10) {
        const Vector r = b - a * x;
        x += lu.solve(r);
    }
    if (!x.allFinite()) throw std::runtime_error("singular linear system");
    return x;
}

/// Time-independent assembled blocks of the per-step system.
struct SystemBlocks {
    SpMat mass;        // velocity mass
    SpMat div;         // (psi_k, div phi_j)
    SpMat trace;       // (mu_m, phi_j . n), empty rows in Strong mode
    Vector pr_int;     // (psi_k, 1)
};

inline SystemBlocks build_system_blocks(const FeSystem& fe, const QuadratureRule& rule) {
    return {assemble_mass(fe, rule), assemble_divergence(fe, rule),
            assemble_normal_trace(fe, rule), assemble_pressure_integrals(fe, rule)};
}

namespace detail {

inline void append_block(std::vector<Eigen::Triplet<double>>& trip, const SpMat& m,
                         int row0, int col0, double scale = 1.0, bool transpose = false) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            if (transpose)
                trip.emplace_back(row0 + it.col(), col0 + it.row(), scale * it.value());
            else
                trip.emplace_back(row0 + it.row(), col0 + it.col(), scale * it.value());
        }
}

}  // namespace detail

/// One implicit-Euler step: solves
///   (1/tau) M (v - v_prev) + R_S(v) - B^T q + T^T lam = load
///   B v + c s = 0,   T v = g_Gamma,   c^T q = 0
/// with Newton iteration and backtracking line search.  Strong constraints
/// are imposed by row elimination; the incoming `constrained` values are
/// written into v before the iteration so updates stay homogeneous.
inline DiscreteState newton_step_solve(const FeSystem& fe, const PowerLawParams& pl,
                                       const TimeGrid& grid, const DiscreteState& prev,
                                       const SystemBlocks& blocks, const Vector& load,
                                       const Vector& g_gamma,
                                       const std::vector<std::pair<int, double>>& constrained,
                                       const QuadratureRule& rule,
                                       const NewtonOptions& opts = {},
                                       StepStats* stats = nullptr) {
    const int nv = fe.n_velocity, np = fe.n_pressure, nl = fe.n_multiplier;
    const int ntot = nv + np + nl + 1;
    const double tau = grid.tau();

    std::vector<char> is_constrained(nv, 0);
    Vector v = prev.v, q = prev.q, lam = prev.lam;
    if (lam.size() != nl) lam = Vector::Zero(nl);
    double s = 0.0;
    for (const auto& [dof, val] : constrained) {
        v[dof] = val;
        is_constrained[dof] = 1;
    }

    auto residual = [&](const Vector& vv, const Vector& qq, const Vector& ll, double ss,
                        const Vector& stress_res) {
        Vector r = Vector::Zero(ntot);
        r.head(nv) = blocks.mass * ((vv - prev.v) / tau) + stress_res -
                     blocks.div.transpose() * qq - load;
        if (nl > 0) r.head(nv) += blocks.trace.transpose() * ll;
        r.segment(nv, np) = blocks.div * vv + blocks.pr_int * ss;
        if (nl > 0) r.segment(nv + np, nl) = blocks.trace * vv - g_gamma;
        r[ntot - 1] = blocks.pr_int.dot(qq);
        for (int d = 0; d < nv; ++d)
            if (is_constrained[d]) r[d] = 0.0;
        return r;
    };

    int iters = 0;
    double rnorm = 0.0, rnorm0 = 0.0;
    for (int it = 0;; ++it) {
        auto [stress_res, stress_jac] = assemble_stress(fe, pl, v, rule);
        Vector r = residual(v, q, lam, s, stress_res);
        rnorm = r.norm();
        if (!std::isfinite(rnorm)) throw std::runtime_error("newton diverged");
        if (it == 0) rnorm0 = rnorm;
        if (rnorm <= std::max(opts.tol_abs, opts.tol_rel * rnorm0)) break;
        if (it >= opts.max_iter) throw std::runtime_error("newton diverged");

        std::vector<Eigen::Triplet<double>> trip;
        SpMat a_vv = blocks.mass / tau + stress_jac;
        for (int k = 0; k < a_vv.outerSize(); ++k)
            for (SpMat::InnerIterator itv(a_vv, k); itv; ++itv)
                if (!is_constrained[itv.row()])
                    trip.emplace_back(itv.row(), itv.col(), itv.value());
        for (int d = 0; d < nv; ++d)
            if (is_constrained[d]) trip.emplace_back(d, d, 1.0);
        for (int k = 0; k < blocks.div.outerSize(); ++k)
            for (SpMat::InnerIterator itv(blocks.div, k); itv; ++itv) {
                trip.emplace_back(nv + itv.row(), itv.col(), itv.value());  // B
                if (!is_constrained[itv.col()])
                    trip.emplace_back(itv.col(), nv + itv.row(), -itv.value());  // -B^T
            }
        if (nl > 0)
            for (int k = 0; k < blocks.trace.outerSize(); ++k)
                for (SpMat::InnerIterator itv(blocks.trace, k); itv; ++itv) {
                    trip.emplace_back(nv + np + itv.row(), itv.col(), itv.value());  // T
                    if (!is_constrained[itv.col()])
                        trip.emplace_back(itv.col(), nv + np + itv.row(), itv.value());  // T^T
                }
        for (int k = 0; k < np; ++k) {
            trip.emplace_back(nv + k, ntot - 1, blocks.pr_int[k]);  // c s
            trip.emplace_back(ntot - 1, nv + k, blocks.pr_int[k]);  // c^T q
        }
        SpMat a(ntot, ntot);
        a.setFromTriplets(trip.begin(), trip.end());
        const Vector delta = solve_saddle_linear(a, -r);

        // backtracking on the residual norm
        double alpha = 1.0;
        Vector vt, qt, lt;
        double st = 0.0;
        for (int halve = 0;; ++halve) {
            vt = v + alpha * delta.head(nv);
            qt = q + alpha * delta.segment(nv, np);
            lt = nl > 0 ? Vector(lam + alpha * delta.segment(nv + np, nl)) : lam;
            st = s + alpha * delta[ntot - 1];
            const Vector sres = assemble_stress_residual(fe, pl, vt, rule);
            const double rt = residual(vt, qt, lt, st, sres).norm();
            if (rt < rnorm || halve >= opts.max_halvings) break;
            alpha *= 0.5;
        }
        v = vt;
        q = qt;
        lam = lt;
        s = st;
        ++iters;
    }
    if (stats) {
        stats->newton_iterations = iters;
        stats->residual = rnorm;
    }
    return {v, q, lam, 0.0, 0};
}

/// Marches the full discrete solution.  Without a manufactured case the
/// forcing and boundary data vanish (free decay from `initial_velocity`).
inline std::vector<DiscreteState> time_march(const FeSystem& fe, const PowerLawParams& pl,
                                             const TimeGrid& grid,
                                             const std::optional<ManufacturedCase>& mc,
                                             const QuadratureRule& rule,
                                             const Vector& initial_velocity = {},
                                             const NewtonOptions& opts = {},
                                             std::vector<StepStats>* stats = nullptr) {
    const SystemBlocks blocks = build_system_blocks(fe, rule);
    DiscreteState state;
    state.v = initial_velocity.size() == fe.n_velocity ? initial_velocity
                                                       : Vector::Zero(fe.n_velocity);
    state.q = Vector::Zero(fe.n_pressure);
    state.lam = Vector::Zero(fe.n_multiplier);

    std::vector<DiscreteState> out;
    out.reserve(grid.M);
    for (int m = 1; m <= grid.M; ++m) {
        const double t0 = grid.node(m - 1), t1 = grid.node(m);
        Vector load = Vector::Zero(fe.n_velocity);
        Vector g_gamma = Vector::Zero(fe.n_multiplier);
        std::vector<std::pair<int, double>> constrained;
        if (mc) {
            load = assemble_rhs(fe, *mc, t0, t1, rule);
            load += assemble_traction_load(fe, *mc, t0, t1, rule);
            g_gamma = assemble_normal_data(fe, *mc, t1, rule);
            constrained = strong_constraint_values(
                fe, [&](const Eigen::Vector2d& x) { return exact_velocity(*mc, t1, x); });
        } else {
            constrained = strong_constraint_values(fe, nullptr);
        }
        StepStats st;
        st.step = m;
        DiscreteState next;
        try {
            next = newton_step_solve(fe, pl, grid, state, blocks, load, g_gamma, constrained,
                                     rule, opts, &st);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(std::string(e.what()) + " at step " + std::to_string(m));
        }
        next.t = t1;
        next.step_index = m;
        if (stats) stats->push_back(st);
        out.push_back(next);
        state = out.back();
    }
    return out;
}

}  // namespace pstokes
