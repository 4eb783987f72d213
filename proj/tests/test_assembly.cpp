#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "pstokes/assembly.hpp"

using namespace pstokes;

namespace {

Vector random_vector(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
}

// coefficients of the P2 interpolant of a smooth vector field
Vector interpolate_p2(const FeSystem& fe, const std::function<Vec2(const Vec2&)>& f) {
    Vector v(fe.n_velocity);
    for (int node = 0; node < fe.n_nodes; ++node) {
        const Vec2 val = f(fe.node_coord(node));
        v[fe.velocity_dof(node, 0)] = val[0];
        v[fe.velocity_dof(node, 1)] = val[1];
    }
    return v;
}

}  // namespace

TEST_CASE("mass matrix integrates constants and is SPD") {
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Weak);
    const QuadratureRule rule = default_quadrature();
    const SpMat m = assemble_mass(fe, rule);
    const Eigen::MatrixXd md(m);
    CHECK((md - md.transpose()).norm() < 1e-13);
    // all-ones coefficients represent the constant field (1,1): 1^T M 1 = 2
    const Vector ones = Vector::Ones(fe.n_velocity);
    CHECK(ones.dot(m * ones) == doctest::Approx(2.0).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(md);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("pressure mass integrates constants") {
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const QuadratureRule rule = default_quadrature();
    const SpMat m = assemble_pressure_mass(fe, rule);
    const Vector ones = Vector::Ones(fe.n_pressure);
    CHECK(ones.dot(m * ones) == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::MatrixXd md(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(md);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    // row sums are the vertex basis integrals
    const Vector c = assemble_pressure_integrals(fe, rule);
    CHECK(((m * ones) - c).norm() < 1e-13);
    CHECK(c.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("stress jacobian matches finite differences") {
    const Triangulation mesh = build_square_mesh(1);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const QuadratureRule rule = default_quadrature();
    for (double p : {1.5, 2.5}) {
        const PowerLawParams pl{1.0, 1e-3, p};
        const Vector v = random_vector(fe.n_velocity, 101);
        const auto [res, jac] = assemble_stress(fe, pl, v, rule);
        CHECK((assemble_stress_residual(fe, pl, v, rule) - res).norm() < 1e-14);
        const double eps = 1e-6;
        double worst = 0.0;
        for (int j = 0; j < fe.n_velocity; ++j) {
            Vector vp = v, vm = v;
            vp[j] += eps;
            vm[j] -= eps;
            const Vector col = (assemble_stress_residual(fe, pl, vp, rule) -
                                assemble_stress_residual(fe, pl, vm, rule)) /
                               (2.0 * eps);
            const Vector jcol = jac.col(j);
            worst = std::max(worst, (col - jcol).norm() / std::max(1.0, jcol.norm()));
        }
        CHECK(worst < 1e-5);
        // jacobian is symmetric (the stress derivative kernel is)
        const Eigen::MatrixXd jd(jac);
        CHECK((jd - jd.transpose()).norm() / jd.norm() < 1e-12);
    }
}

TEST_CASE("linear stress reduces to the vector laplacian form") {
    // p = 2, delta = 0: residual is linear, R(v) = K v with K = jacobian
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const QuadratureRule rule = default_quadrature();
    const PowerLawParams pl{2.0, 0.0, 2.0};
    const Vector v = random_vector(fe.n_velocity, 55);
    const auto [res, jac] = assemble_stress(fe, pl, v, rule);
    CHECK((res - jac * v).norm() < 1e-11 * res.norm());
}

TEST_CASE("divergence matrix on exactly representable fields") {
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const QuadratureRule rule = default_quadrature();
    const SpMat b = assemble_divergence(fe, rule);
    // constant and rigid-rotation fields are divergence free
    const Vector vc = interpolate_p2(fe, [](const Vec2&) { return Vec2(1.0, -2.0); });
    CHECK((b * vc).norm() < 1e-12);
    const Vector vr = interpolate_p2(fe, [](const Vec2& x) { return Vec2(x.y(), -x.x()); });
    CHECK((b * vr).norm() < 1e-12);
    // v = (x, 0) has div = 1, so rows reduce to the pressure integrals
    const Vector vx = interpolate_p2(fe, [](const Vec2& x) { return Vec2(x.x(), 0.0); });
    const Vector c = assemble_pressure_integrals(fe, rule);
    CHECK((b * vx - c).norm() < 1e-12);
}

TEST_CASE("normal trace against analytic edge integrals") {
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Weak);
    const QuadratureRule rule = default_quadrature();
    const SpMat t = assemble_normal_trace(fe, rule);
    CHECK(t.rows() == fe.n_multiplier);
    // u = (1, 0): facet moments are n_x * len/2 for both hat multipliers
    const Vector u = interpolate_p2(fe, [](const Vec2&) { return Vec2(1.0, 0.0); });
    const Vector tu = t * u;
    for (int f = 0; f < static_cast<int>(mesh.boundary_facets.size()); ++f) {
        const BoundaryFacet& bf = mesh.boundary_facets[f];
        const Edge& e = mesh.edges[bf.edge];
        const double len = (mesh.vertices[e.v[1]] - mesh.vertices[e.v[0]]).norm();
        const double expect = bf.normal.x() * 0.5 * len;
        CHECK(tu[2 * f + 0] == doctest::Approx(expect).epsilon(1e-12));
        CHECK(tu[2 * f + 1] == doctest::Approx(expect).epsilon(1e-12));
    }
    // u = (y, -x) is tangential on the whole square boundary: trace vanishes
    const Vector ur = interpolate_p2(fe, [](const Vec2& x) { return Vec2(x.y(), -x.x()); });
    CHECK((t * ur).norm() > 0.0);  // not zero: u.n = y*n_x - x*n_y per facet
    // bottom edge (n = (0,-1)): u.n = x, moment of mu0 over [0,1/2] etc.
    // check a linear-data facet exactly
    for (int f = 0; f < static_cast<int>(mesh.boundary_facets.size()); ++f) {
        const BoundaryFacet& bf = mesh.boundary_facets[f];
        if (std::abs(bf.normal.y() + 1.0) > 1e-14) continue;  // bottom only
        const Edge& e = mesh.edges[bf.edge];
        const Vec2 a = mesh.vertices[e.v[0]], bb = mesh.vertices[e.v[1]];
        const double len = (bb - a).norm();
        // u.n along the facet: g(s) = x(s) with x(s) = a_x + s (b_x - a_x)
        const double g0 = a.x(), g1 = bb.x();
        // int mu0 g = len (g0/3 + g1/6); int mu1 g = len (g0/6 + g1/3)
        CHECK((t * ur)[2 * f + 0] == doctest::Approx(len * (g0 / 3 + g1 / 6)).epsilon(1e-12));
        CHECK((t * ur)[2 * f + 1] == doctest::Approx(len * (g0 / 6 + g1 / 3)).epsilon(1e-12));
    }
    // strong mode has no multiplier rows
    const FeSystem fs = build_fe_system(mesh, BcMode::Strong);
    CHECK(assemble_normal_trace(fs, rule).rows() == 0);
}

TEST_CASE("rhs assembly is quadrature-converged") {
    // smooth case (p = 2, alpha = 2): degree-6 vs degree-8 spatial rules agree
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const ManufacturedCase mc(PowerLawParams{1.0, 1e-5, 2.0}, 2.0, 1e-3, 0.1);
    QuadratureRule r6 = default_quadrature();
    QuadratureRule r8{triangle_rule_degree8(), gauss_rule_unit(4), gauss_rule_unit(3)};
    const Vector l6 = assemble_rhs(fe, mc, 0.0, 0.05, r6);
    const Vector l8 = assemble_rhs(fe, mc, 0.0, 0.05, r8);
    CHECK((l6 - l8).norm() / l8.norm() < 1e-6);
}

TEST_CASE("rhs linear-time structure") {
    // the forcing is affine in t (d_t v constant in t, S and q linear for
    // p = 2), so interval averages over [0,tau] and [tau,2tau] differ by the
    // average over the shift: L[t0,t1] + L[t2,t3] = 2 L[(t0+t2)/2,(t1+t3)/2]
    const Triangulation mesh = build_square_mesh(1);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const ManufacturedCase mc(PowerLawParams{1.0, 1e-5, 2.0}, 2.0, 1e-3, 0.1);
    const QuadratureRule rule = default_quadrature();
    const Vector a = assemble_rhs(fe, mc, 0.0, 0.025, rule);
    const Vector b = assemble_rhs(fe, mc, 0.05, 0.075, rule);
    const Vector m = assemble_rhs(fe, mc, 0.025, 0.05, rule);
    CHECK((a + b - 2.0 * m).norm() < 1e-11 * m.norm());
}

TEST_CASE("velocity load of an exactly representable field") {
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    const QuadratureRule rule = default_quadrature();
    const SpMat m = assemble_mass(fe, rule);
    auto f = [](const Vec2& x) { return Vec2(x.x() * x.y(), x.x() - x.y()); };
    const Vector load = assemble_velocity_load(fe, f, rule);
    const Vector vi = interpolate_p2(fe, f);
    // (f, phi_i) = (v_i, phi_i) when f is in the P2 space
    CHECK((load - m * vi).norm() < 1e-12);
}

TEST_CASE("boundary traction load against a dense facet oracle") {
    const Triangulation mesh = build_square_mesh(2);
    const QuadratureRule rule = default_quadrature();
    for (double p : {1.5, 2.5}) {
        for (double alpha : {1.0, 0.5}) {
            const FeSystem fe = build_fe_system(mesh, BcMode::Weak);
            const ManufacturedCase mc(PowerLawParams{1.0, 1e-5, p}, alpha, 1.0, 0.1);
            const double t0 = 0.02, t1 = 0.06;
            const Vector load = assemble_traction_load(fe, mc, t0, t1, rule);
            // the load is a pure boundary functional, independent of the mode
            const FeSystem fs = build_fe_system(mesh, BcMode::Strong);
            CHECK((assemble_traction_load(fs, mc, t0, t1, rule) - load).norm() == 0.0);
            // only boundary-node dofs are loaded
            double interior = 0.0;
            for (int node = 0; node < fe.n_nodes; ++node) {
                const Vec2 x = fe.node_coord(node);
                const bool bdry = x.x() < 1e-14 || x.x() > 1 - 1e-14 || x.y() < 1e-14 ||
                                  x.y() > 1 - 1e-14;
                if (!bdry)
                    interior += std::abs(load[fe.velocity_dof(node, 0)]) +
                                std::abs(load[fe.velocity_dof(node, 1)]);
            }
            CHECK(interior == 0.0);
            // dense Simpson oracle on one off-origin facet, with the same
            // Gauss rule in time as the assembler
            for (int f = 0; f < static_cast<int>(mesh.boundary_facets.size()); ++f) {
                const BoundaryFacet& bf = mesh.boundary_facets[f];
                const Edge& e = mesh.edges[bf.edge];
                const Vec2 a = mesh.vertices[e.v[0]], b = mesh.vertices[e.v[1]];
                if (std::abs(bf.normal.x() - 1.0) > 1e-14) continue;  // right edge
                if (std::abs(a.y()) > 1e-14) continue;  // facet starting at (1,0)
                const int mid = fe.node_of_edge(bf.edge);
                const double len = (b - a).norm();
                auto traction = [&](double s) {
                    const Vec2 x = a + s * (b - a);
                    double tr = 0.0;
                    for (const auto& [st, wt] : rule.time) {
                        const double tg = t0 + st * (t1 - t0);
                        const Mat2 eps_v = sym_part(exact_velocity_gradient(mc, tg, x));
                        tr += wt * (exact_pressure(mc, tg, x) -
                                    bf.normal.dot(stress(mc.params, eps_v) * bf.normal));
                    }
                    return tr;
                };
                // the midpoint normal dof pairs with the quadratic bubble
                // 4s(1-s) on this facet and nothing on adjacent facets
                auto integrand = [&](double s) { return traction(s) * 4.0 * s * (1.0 - s); };
                const int n = 20000;
                double acc = integrand(0.0) + integrand(1.0);
                for (int k = 1; k < n; ++k)
                    acc += (k % 2 ? 4.0 : 2.0) * integrand(static_cast<double>(k) / n);
                const double oracle = len * acc / (3.0 * n);
                // the assembler's fixed edge Gauss rule carries a small
                // quadrature error for the non-polynomial traction
                CHECK(load[fe.velocity_dof(mid, 0)] ==
                      doctest::Approx(oracle).epsilon(2e-4));
                CHECK(load[fe.velocity_dof(mid, 1)] == 0.0);
            }
        }
    }
}
