#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "pstokes/assembly.hpp"
#include "pstokes/solver.hpp"

// Discrete Leray projection toolkit: the discrete gradient, divergence and
// inverse Neumann-Laplacian, the projections P_h / P_h^perp / P_{V_h}, and
// the L^r stability-constant sweep.  One factorization per operator class,
// cached for the lifetime of the LerayOperators object.

namespace pstokes {

class LerayOperators {
public:
    LerayOperators(const FeSystem& fe, const QuadratureRule& rule)
        : fe_(&fe), rule_(rule) {
        mass_ = assemble_mass(fe, rule);
        div_ = assemble_divergence(fe, rule);
        trace_ = assemble_normal_trace(fe, rule);
        pr_int_ = assemble_pressure_integrals(fe, rule);
        pressure_mass_ = assemble_pressure_mass(fe, rule);

        is_constrained_.assign(fe.n_velocity, 0);
        if (fe.bc_mode == BcMode::Strong)
            for (const StrongComponent& s : fe.strong) is_constrained_[s.dof] = 1;

        build_mass_system();
        build_leray_system();
        build_pressure_mass_system();
    }

    const FeSystem& fe() const { return *fe_; }
    const QuadratureRule& rule() const { return rule_; }
    const SpMat& mass() const { return mass_; }
    const SpMat& divergence_matrix() const { return div_; }
    const SpMat& trace_matrix() const { return trace_; }
    const Vector& pressure_integrals() const { return pr_int_; }
    const SpMat& pressure_mass() const { return pressure_mass_; }

    /// V_h mass solve: (w, xi) = load(xi) for all xi in V_h, w in V_h.
    Vector constrained_mass_solve(const Vector& load) const {
        const int nv = fe_->n_velocity;
        Vector rhs = Vector::Zero(mass_dim_);
        rhs.head(nv) = load;
        for (int d = 0; d < nv; ++d)
            if (is_constrained_[d]) rhs[d] = 0.0;
        const Vector x = mass_lu_->solve(rhs);
        if (mass_lu_->info() != Eigen::Success) throw std::runtime_error("factorization failure");
        return x.head(nv);
    }

    /// P_h via the constrained least-squares saddle system; `load` is the
    /// moment vector (u, phi_i).
    Vector leray_project_load(const Vector& load) const {
        const int nv = fe_->n_velocity;
        Vector rhs = Vector::Zero(leray_dim_);
        rhs.head(nv) = load;
        for (int d = 0; d < nv; ++d)
            if (is_constrained_[d]) rhs[d] = 0.0;
        const Vector x = leray_lu_->solve(rhs);
        if (leray_lu_->info() != Eigen::Success) throw std::runtime_error("factorization failure");
        return x.head(nv);
    }

    /// Zero-mean pressure mass solve: x in Q_h with (x, psi_k) = ell_k for
    /// zero-mean tests.
    Vector pressure_mass_solve(const Vector& ell) const {
        const int np = fe_->n_pressure;
        Vector rhs = Vector::Zero(np + 1);
        rhs.head(np) = ell;
        return Vector(prmass_lu_->solve(rhs)).head(np);
    }

    /// Columns grad_cols[k] = nabla^h psi_k and the Gram matrix
    /// G_kl = (nabla^h psi_k, nabla^h psi_l); built on first use.
    const Eigen::MatrixXd& gradient_columns() const {
        ensure_gradients();
        return grad_cols_;
    }
    const Eigen::MatrixXd& gram() const {
        ensure_gradients();
        return gram_;
    }

    /// Solve the bordered Gram system [G c; c^T 0] x = [rhs; 0].
    Vector neumann_solve(const Vector& rhs) const {
        ensure_gradients();
        const int np = fe_->n_pressure;
        Vector b = Vector::Zero(np + 1);
        b.head(np) = rhs;
        const Vector x = neumann_lu_->solve(b);
        return x.head(np);
    }

private:
    void build_mass_system() {
        const int nv = fe_->n_velocity, nl = fe_->n_multiplier;
        mass_dim_ = fe_->bc_mode == BcMode::Weak ? nv + nl : nv;
        std::vector<Eigen::Triplet<double>> trip;
        for (int k = 0; k < mass_.outerSize(); ++k)
            for (SpMat::InnerIterator it(mass_, k); it; ++it)
                if (!is_constrained_[it.row()])
                    trip.emplace_back(it.row(), it.col(), it.value());
        for (int d = 0; d < nv; ++d)
            if (is_constrained_[d]) trip.emplace_back(d, d, 1.0);
        if (fe_->bc_mode == BcMode::Weak)
            for (int k = 0; k < trace_.outerSize(); ++k)
                for (SpMat::InnerIterator it(trace_, k); it; ++it) {
                    trip.emplace_back(nv + it.row(), it.col(), it.value());
                    trip.emplace_back(it.col(), nv + it.row(), it.value());
                }
        SpMat a(mass_dim_, mass_dim_);
        a.setFromTriplets(trip.begin(), trip.end());
        mass_lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
        mass_lu_->compute(a);
        if (mass_lu_->info() != Eigen::Success) throw std::runtime_error("factorization failure");
    }

    void build_leray_system() {
        const int nv = fe_->n_velocity, np = fe_->n_pressure, nl = fe_->n_multiplier;
        leray_dim_ = nv + np + nl + 1;
        std::vector<Eigen::Triplet<double>> trip;
        for (int k = 0; k < mass_.outerSize(); ++k)
            for (SpMat::InnerIterator it(mass_, k); it; ++it)
                if (!is_constrained_[it.row()])
                    trip.emplace_back(it.row(), it.col(), it.value());
        for (int d = 0; d < nv; ++d)
            if (is_constrained_[d]) trip.emplace_back(d, d, 1.0);
        for (int k = 0; k < div_.outerSize(); ++k)
            for (SpMat::InnerIterator it(div_, k); it; ++it) {
                trip.emplace_back(nv + it.row(), it.col(), it.value());
                if (!is_constrained_[it.col()])
                    trip.emplace_back(it.col(), nv + it.row(), it.value());
            }
        if (nl > 0)
            for (int k = 0; k < trace_.outerSize(); ++k)
                for (SpMat::InnerIterator it(trace_, k); it; ++it) {
                    trip.emplace_back(nv + np + it.row(), it.col(), it.value());
                    if (!is_constrained_[it.col()])
                        trip.emplace_back(it.col(), nv + np + it.row(), it.value());
                }
        for (int k = 0; k < np; ++k) {
            trip.emplace_back(nv + k, leray_dim_ - 1, pr_int_[k]);
            trip.emplace_back(leray_dim_ - 1, nv + k, pr_int_[k]);
        }
        SpMat a(leray_dim_, leray_dim_);
        a.setFromTriplets(trip.begin(), trip.end());
        leray_lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
        leray_lu_->compute(a);
        if (leray_lu_->info() != Eigen::Success) throw std::runtime_error("factorization failure");
    }

    void build_pressure_mass_system() {
        const int np = fe_->n_pressure;
        std::vector<Eigen::Triplet<double>> trip;
        for (int k = 0; k < pressure_mass_.outerSize(); ++k)
            for (SpMat::InnerIterator it(pressure_mass_, k); it; ++it)
                trip.emplace_back(it.row(), it.col(), it.value());
        for (int k = 0; k < np; ++k) {
            trip.emplace_back(k, np, pr_int_[k]);
            trip.emplace_back(np, k, pr_int_[k]);
        }
        SpMat a(np + 1, np + 1);
        a.setFromTriplets(trip.begin(), trip.end());
        prmass_lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
        prmass_lu_->compute(a);
        if (prmass_lu_->info() != Eigen::Success) throw std::runtime_error("factorization failure");
    }

    void ensure_gradients() const {
        if (grad_cols_.size() > 0) return;
        const int nv = fe_->n_velocity, np = fe_->n_pressure;
        grad_cols_.resize(nv, np);
        for (int k = 0; k < np; ++k) {
            Vector e = Vector::Zero(np);
            e[k] = 1.0;
            grad_cols_.col(k) = constrained_mass_solve(-div_.transpose() * e);
        }
        // G_kl = (grad psi_k, grad psi_l) = -(psi_k, div grad psi_l)
        gram_ = -(div_ * grad_cols_);
        gram_ = 0.5 * (gram_ + gram_.transpose().eval());  // symmetrize roundoff
        std::vector<Eigen::Triplet<double>> trip;
        for (int i = 0; i < np; ++i)
            for (int j = 0; j < np; ++j)
                if (gram_(i, j) != 0.0) trip.emplace_back(i, j, gram_(i, j));
        for (int k = 0; k < np; ++k) {
            trip.emplace_back(k, np, pr_int_[k]);
            trip.emplace_back(np, k, pr_int_[k]);
        }
        SpMat a(np + 1, np + 1);
        a.setFromTriplets(trip.begin(), trip.end());
        neumann_lu_ = std::make_unique<Eigen::SparseLU<SpMat>>();
        neumann_lu_->compute(a);
        if (neumann_lu_->info() != Eigen::Success)
            throw std::runtime_error("inf-sup failure: singular Gram matrix");
    }

    const FeSystem* fe_;
    QuadratureRule rule_;
    SpMat mass_, div_, trace_, pressure_mass_;
    Vector pr_int_;
    std::vector<char> is_constrained_;
    int mass_dim_ = 0, leray_dim_ = 0;
    std::unique_ptr<Eigen::SparseLU<SpMat>> mass_lu_, leray_lu_, prmass_lu_;
    mutable Eigen::MatrixXd grad_cols_, gram_;
    mutable std::unique_ptr<Eigen::SparseLU<SpMat>> neumann_lu_;
};

/// nabla^h q: the V_h representer of -(q, div .).
inline Vector discrete_gradient(const LerayOperators& ops, const Vector& q_coeffs) {
    return ops.constrained_mass_solve(-ops.divergence_matrix().transpose() * q_coeffs);
}

/// div^h u for u given by velocity coefficients.
inline Vector discrete_divergence(const LerayOperators& ops, const Vector& u_coeffs) {
    const Eigen::MatrixXd& gc = ops.gradient_columns();
    const Vector ell = -(gc.transpose() * (ops.mass() * u_coeffs));
    return ops.pressure_mass_solve(ell);
}

/// (Delta_N^h)^{-1} q for q given by pressure coefficients.
inline Vector discrete_inverse_neumann(const LerayOperators& ops, const Vector& q_coeffs) {
    return ops.neumann_solve(-(ops.pressure_mass() * q_coeffs));
}

inline Vector leray_project(const LerayOperators& ops, const Vector& u_coeffs) {
    return ops.leray_project_load(ops.mass() * u_coeffs);
}

template <class Field>
Vector leray_project_field(const LerayOperators& ops, const Field& u) {
    return ops.leray_project_load(assemble_velocity_load(ops.fe(), u, ops.rule()));
}

inline Vector leray_complement(const LerayOperators& ops, const Vector& u_coeffs) {
    return u_coeffs - leray_project(ops, u_coeffs);
}

/// P_{V_h} of a coefficient vector (identity on V_h up to constraints).
inline Vector project_unconstrained(const LerayOperators& ops, const Vector& u_coeffs) {
    return ops.constrained_mass_solve(ops.mass() * u_coeffs);
}

template <class Field>
Vector project_unconstrained_field(const LerayOperators& ops, const Field& u) {
    return ops.constrained_mass_solve(assemble_velocity_load(ops.fe(), u, ops.rule()));
}

/// L^r norm of a P2 vector coefficient field by quadrature.
inline double lr_norm(const FeSystem& fe, const Vector& coeffs, double r,
                      const QuadratureRule& rule) {
    double acc = 0.0;
    for (int t = 0; t < static_cast<int>(fe.mesh->triangles.size()); ++t) {
        const auto nodes = fe.p2_nodes(t);
        const auto qp = element_quadrature(fe, t, rule.triangle);
        for (const LocalQuadPoint& q : qp) {
            Vec2 v = Vec2::Zero();
            for (int a = 0; a < 6; ++a)
                for (int c = 0; c < 2; ++c)
                    v[c] += coeffs[fe.velocity_dof(nodes[a], c)] * q.n2[a];
            acc += q.w * std::pow(v.norm(), r);
        }
    }
    return std::pow(acc, 1.0 / r);
}

struct StabilityRow {
    double r = 0.0;
    double c_stab_ph = 0.0;
    double c_stab_ph_perp = 0.0;
    int skipped = 0;  // basis functions with degenerate denominator
};

/// c_stab(J) = max_j ||J P_{V_h} phi_j||_r / ||P_{V_h} phi_j||_r over the
/// shape basis of the unconstrained velocity space.
inline std::vector<StabilityRow> stability_constants(const LerayOperators& ops,
                                                     const std::vector<double>& r_list) {
    const FeSystem& fe = ops.fe();
    std::vector<StabilityRow> rows;
    for (double r : r_list) rows.push_back({r, 0.0, 0.0, 0});
    for (int j = 0; j < fe.n_velocity; ++j) {
        Vector e = Vector::Zero(fe.n_velocity);
        e[j] = 1.0;
        const Vector y = ops.constrained_mass_solve(ops.mass() * e);  // P_{V_h} phi_j
        const Vector py = ops.leray_project_load(ops.mass() * y);
        const Vector cy = y - py;
        for (std::size_t k = 0; k < r_list.size(); ++k) {
            const double denom = lr_norm(fe, y, r_list[k], ops.rule());
            if (denom <= 1e-13) {
                ++rows[k].skipped;
                continue;
            }
            rows[k].c_stab_ph = std::max(rows[k].c_stab_ph,
                                         lr_norm(fe, py, r_list[k], ops.rule()) / denom);
            rows[k].c_stab_ph_perp = std::max(rows[k].c_stab_ph_perp,
                                              lr_norm(fe, cy, r_list[k], ops.rule()) / denom);
        }
    }
    return rows;
}

struct ProbeRow {
    int n = 0;
    double err_gradient = 0.0;  // ||P_h grad g||_{L^2}
    double err_solenoidal = 0.0;  // ||v - P_h v||_{L^2}
};

/// Decay probe against two fields with known continuous projections:
/// grad g with grad g . n = 0 (P grad g = 0) and a compactly supported
/// divergence-free curl field (P v = v).
inline std::vector<ProbeRow> operator_convergence_probe(const std::vector<int>& n_list,
                                                        BcMode bc,
                                                        const QuadratureRule& rule) {
    auto grad_g = [](const Eigen::Vector2d& x) {
        const double pi = std::acos(-1.0);
        return Vec2(-pi * std::sin(pi * x.x()) * std::cos(pi * x.y()),
                    -pi * std::cos(pi * x.x()) * std::sin(pi * x.y()));
    };
    auto bubble_curl = [](const Eigen::Vector2d& x) {
        const double a = x.x() * (1.0 - x.x());
        const double b = x.y() * (1.0 - x.y());
        const double da = 1.0 - 2.0 * x.x();
        const double db = 1.0 - 2.0 * x.y();
        // psi = (a b)^2, v = (d psi / dy, -d psi / dx)
        return Vec2(2.0 * a * a * b * db, -2.0 * a * b * b * da);
    };
    std::vector<ProbeRow> rows;
    for (int n : n_list) {
        const Triangulation mesh = build_square_mesh(n);
        const FeSystem fe = build_fe_system(mesh, bc);
        LerayOperators ops(fe, rule);
        ProbeRow row;
        row.n = n;
        row.err_gradient = lr_norm(fe, leray_project_field(ops, grad_g), 2.0, rule);
        const Vector v_h = project_unconstrained_field(ops, bubble_curl);
        const Vector pv = leray_project(ops, v_h);
        // compare against the exact field, not its interpolant
        double acc = 0.0;
        for (int t = 0; t < static_cast<int>(fe.mesh->triangles.size()); ++t) {
            const auto nodes = fe.p2_nodes(t);
            for (const LocalQuadPoint& q : element_quadrature(fe, t, rule.triangle)) {
                Vec2 val = Vec2::Zero();
                for (int a = 0; a < 6; ++a)
                    for (int c = 0; c < 2; ++c)
                        val[c] += pv[fe.velocity_dof(nodes[a], c)] * q.n2[a];
                acc += q.w * (bubble_curl(q.x) - val).squaredNorm();
            }
        }
        row.err_solenoidal = std::sqrt(acc);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pstokes
