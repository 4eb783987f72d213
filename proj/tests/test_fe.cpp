#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "pstokes/fe.hpp"

using namespace pstokes;

TEST_CASE("P1 basis nodal property and partition of unity") {
    const std::array<Eigen::Vector2d, 3> nodes{{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}}};
    for (int i = 0; i < 3; ++i) {
        const BasisEval b = eval_basis_p1(nodes[i]);
        for (int j = 0; j < 3; ++j)
            CHECK(b.values[j] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-14));
    }
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        double x = u(rng), y = u(rng);
        if (x + y > 1.0) { x = 1.0 - x; y = 1.0 - y; }
        const BasisEval b = eval_basis_p1({x, y});
        double s = 0.0;
        Eigen::Vector2d gs = Eigen::Vector2d::Zero();
        for (int j = 0; j < 3; ++j) { s += b.values[j]; gs += b.grads[j]; }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(gs.norm() < 1e-14);
    }
    CHECK_THROWS_AS(eval_basis_p1({-0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(eval_basis_p1({0.7, 0.7}), std::invalid_argument);
}

TEST_CASE("P2 basis nodal property, partition of unity and gradients") {
    const std::array<Eigen::Vector2d, 6> nodes{{{0.0, 0.0},
                                                {1.0, 0.0},
                                                {0.0, 1.0},
                                                {0.5, 0.0},
                                                {0.5, 0.5},
                                                {0.0, 0.5}}};
    for (int i = 0; i < 6; ++i) {
        const BasisEval b = eval_basis_p2(nodes[i]);
        for (int j = 0; j < 6; ++j)
            CHECK(b.values[j] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-13));
    }
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 100; ++k) {
        double x = u(rng), y = u(rng);
        if (x + y > 1.0) { x = 1.0 - x; y = 1.0 - y; }
        const BasisEval b = eval_basis_p2({x, y});
        double s = 0.0;
        Eigen::Vector2d gs = Eigen::Vector2d::Zero();
        for (int j = 0; j < 6; ++j) { s += b.values[j]; gs += b.grads[j]; }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(gs.norm() < 1e-12);
        // gradients match central differences
        const double eps = 1e-6;
        const BasisEval bx1 = eval_basis_p2({x + eps, y}), bx0 = eval_basis_p2({x - eps, y});
        const BasisEval by1 = eval_basis_p2({x, y + eps}), by0 = eval_basis_p2({x, y - eps});
        for (int j = 0; j < 6; ++j) {
            CHECK(b.grads[j].x() ==
                  doctest::Approx((bx1.values[j] - bx0.values[j]) / (2 * eps)).epsilon(1e-6));
            CHECK(b.grads[j].y() ==
                  doctest::Approx((by1.values[j] - by0.values[j]) / (2 * eps)).epsilon(1e-6));
        }
    }
}

TEST_CASE("system dimensions on the base mesh") {
    const Triangulation mesh = build_square_mesh(1);
    const FeSystem strong = build_fe_system(mesh, BcMode::Strong);
    CHECK(strong.n_nodes == 9);  // 4 vertices + 5 edge midpoints
    CHECK(strong.n_velocity == 18);
    CHECK(strong.n_pressure == 4);
    CHECK(strong.n_multiplier == 0);
    const FeSystem weak = build_fe_system(mesh, BcMode::Weak);
    CHECK(weak.n_multiplier == 8);  // 2 per boundary facet
    CHECK(weak.strong.empty());
}

TEST_CASE("strong constraint enumeration on the base mesh") {
    const Triangulation mesh = build_square_mesh(1);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    // 4 corners fix both components (8 DOFs); 4 boundary edge midpoints fix
    // the normal component (4 DOFs)
    CHECK(fe.strong.size() == 12);
    int corner_dofs = 0, midpoint_dofs = 0;
    for (const StrongComponent& s : fe.strong) {
        const Eigen::Vector2d x = fe.node_coord(s.node);
        const bool on_boundary = x.x() == 0.0 || x.x() == 1.0 || x.y() == 0.0 || x.y() == 1.0;
        CHECK(on_boundary);
        if (s.corner) {
            ++corner_dofs;
        } else {
            ++midpoint_dofs;
            // a non-corner boundary node is constrained in its facet normal
            const bool vertical = x.x() == 0.0 || x.x() == 1.0;
            CHECK(s.comp == (vertical ? 0 : 1));
        }
        CHECK(s.dof == fe.velocity_dof(s.node, s.comp));
    }
    CHECK(corner_dofs == 8);
    CHECK(midpoint_dofs == 4);
}

TEST_CASE("strong constraint counts scale with the boundary") {
    for (int n : {2, 4}) {
        const Triangulation mesh = build_square_mesh(n);
        const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
        // corners: 4*2; other boundary vertices: 4(n-1); midpoints: 4n
        CHECK(static_cast<int>(fe.strong.size()) == 8 + 4 * (n - 1) + 4 * n);
    }
}

TEST_CASE("strong values interpolate the data at constrained nodes") {
    const Triangulation mesh = build_square_mesh(2);
    auto field = [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.y(), -x.x()); };
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong, field, true);
    const auto vals = strong_constraint_values(fe, field);
    CHECK(vals.size() == fe.strong.size());
    for (std::size_t k = 0; k < vals.size(); ++k) {
        const StrongComponent& s = fe.strong[k];
        CHECK(vals[k].first == s.dof);
        CHECK(vals[k].second ==
              doctest::Approx(field(fe.node_coord(s.node))[s.comp]).epsilon(1e-14));
    }
    // homogeneous variant returns zeros
    for (const auto& [dof, v] : strong_constraint_values(fe, nullptr)) CHECK(v == 0.0);
}

TEST_CASE("inhomogeneous strong data requires a field") {
    const Triangulation mesh = build_square_mesh(1);
    CHECK_THROWS_AS(build_fe_system(mesh, BcMode::Strong, nullptr, true),
                    std::invalid_argument);
    CHECK_NOTHROW(build_fe_system(mesh, BcMode::Weak, nullptr, true));
}

TEST_CASE("triangle node lookup is geometrically consistent") {
    const Triangulation mesh = build_square_mesh(2);
    const FeSystem fe = build_fe_system(mesh, BcMode::Strong);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto nodes = fe.p2_nodes(t);
        const Triangle& tr = mesh.triangles[t];
        const std::array<Eigen::Vector2d, 3> v{mesh.vertices[tr.v[0]], mesh.vertices[tr.v[1]],
                                               mesh.vertices[tr.v[2]]};
        // local edge ordering (0,1),(1,2),(2,0) matches midpoint coordinates
        CHECK((fe.node_coord(nodes[3]) - 0.5 * (v[0] + v[1])).norm() < 1e-14);
        CHECK((fe.node_coord(nodes[4]) - 0.5 * (v[1] + v[2])).norm() < 1e-14);
        CHECK((fe.node_coord(nodes[5]) - 0.5 * (v[2] + v[0])).norm() < 1e-14);
    }
}
