#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "pstokes/mesh.hpp"

using namespace pstokes;

namespace {

std::set<std::pair<long long, long long>> vertex_keys(const Triangulation& m) {
    std::set<std::pair<long long, long long>> keys;
    for (const auto& v : m.vertices)
        keys.emplace(std::llround(v.x() * 1e12), std::llround(v.y() * 1e12));
    return keys;
}

}  // namespace

TEST_CASE("two-triangle base mesh") {
    const Triangulation m = build_square_mesh(1);
    CHECK(m.vertices.size() == 4);
    CHECK(m.triangles.size() == 2);
    CHECK(m.edges.size() == 5);
    CHECK(m.boundary_facets.size() == 4);
    CHECK(m.h == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    for (int t = 0; t < 2; ++t) CHECK(m.triangle_area(t) == doctest::Approx(0.5));
    int corners = 0;
    for (auto c : m.is_corner) corners += c;
    CHECK(corners == 4);
    // diagonal runs lower-left to upper-right: vertex (0,0)-(1,1) edge exists
    bool found_diag = false;
    for (const Edge& e : m.edges) {
        const auto a = m.vertices[e.v[0]], b = m.vertices[e.v[1]];
        if ((a - Eigen::Vector2d(0, 0)).norm() < 1e-14 &&
            (b - Eigen::Vector2d(1, 1)).norm() < 1e-14)
            found_diag = true;
    }
    CHECK(found_diag);
}

TEST_CASE("structured mesh counts and areas") {
    for (int n : {2, 3, 4, 7}) {
        const Triangulation m = build_square_mesh(n);
        const int nv = (n + 1) * (n + 1);
        const int nt = 2 * n * n;
        CHECK(static_cast<int>(m.vertices.size()) == nv);
        CHECK(static_cast<int>(m.triangles.size()) == nt);
        // Euler: E = V + T - 1 for a planar disc-like triangulation
        CHECK(static_cast<int>(m.edges.size()) == nv + nt - 1);
        CHECK(static_cast<int>(m.boundary_facets.size()) == 4 * n);
        double area = 0.0;
        for (int t = 0; t < nt; ++t) {
            CHECK(m.triangle_area(t) > 0.0);
            CHECK(m.triangle_area(t) == doctest::Approx(0.5 / (n * n)).epsilon(1e-12));
            area += m.triangle_area(t);
        }
        CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.h == doctest::Approx(std::sqrt(2.0) / n).epsilon(1e-12));
    }
}

TEST_CASE("boundary normals are outward and axis-aligned") {
    const Triangulation m = build_square_mesh(3);
    const Eigen::Vector2d center(0.5, 0.5);
    for (const BoundaryFacet& f : m.boundary_facets) {
        const Edge& e = m.edges[f.edge];
        const Eigen::Vector2d mid = 0.5 * (m.vertices[e.v[0]] + m.vertices[e.v[1]]);
        CHECK(f.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(f.normal.dot(mid - center) > 0.0);
        // axis alignment on the unit square
        CHECK(std::min(std::abs(f.normal.x()), std::abs(f.normal.y())) < 1e-14);
        // the stored triangle is adjacent to the edge
        CHECK(f.tri == e.tri[0]);
        CHECK(e.tri[1] == -1);
    }
}

TEST_CASE("interior edges have two adjacent triangles") {
    const Triangulation m = build_square_mesh(2);
    int boundary = 0;
    for (const Edge& e : m.edges) {
        CHECK(e.v[0] < e.v[1]);
        if (e.tri[1] == -1) ++boundary;
        CHECK(e.tri[0] >= 0);
    }
    CHECK(boundary == static_cast<int>(m.boundary_facets.size()));
}

TEST_CASE("uniform refinement halves h and quadruples triangles") {
    Triangulation m = build_square_mesh(1);
    double h = m.h;
    for (int k = 0; k < 3; ++k) {
        const Triangulation r = refine_uniform(m);
        CHECK(r.triangles.size() == 4 * m.triangles.size());
        CHECK(r.h == doctest::Approx(0.5 * h).epsilon(1e-14));
        double area = 0.0;
        for (int t = 0; t < static_cast<int>(r.triangles.size()); ++t)
            area += r.triangle_area(t);
        CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
        m = r;
        h = r.h;
    }
}

TEST_CASE("refinement of the base mesh reproduces the structured vertex set") {
    // k-fold refinement of the 2-triangle mesh covers the same nodes as the
    // direct 2^k x 2^k construction
    Triangulation r = build_square_mesh(1);
    for (int k = 1; k <= 3; ++k) {
        r = refine_uniform(r);
        const Triangulation d = build_square_mesh(1 << k);
        CHECK(r.vertices.size() == d.vertices.size());
        CHECK(vertex_keys(r) == vertex_keys(d));
        CHECK(r.triangles.size() == d.triangles.size());
    }
}

TEST_CASE("invalid subdivision count") {
    CHECK_THROWS_AS(build_square_mesh(0), std::invalid_argument);
    CHECK_THROWS_AS(build_square_mesh(-2), std::invalid_argument);
}

TEST_CASE("mesh csv dump has all sections") {
    const Triangulation m = build_square_mesh(2);
    const std::string path = "mesh_dump_test.csv";
    dump_mesh_csv(m, path);
    std::ifstream in(path);
    int nvert = 0, ntri = 0, nfac = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("vertex,", 0) == 0) ++nvert;
        if (line.rfind("triangle,", 0) == 0) ++ntri;
        if (line.rfind("facet,", 0) == 0) ++nfac;
    }
    CHECK(nvert == static_cast<int>(m.vertices.size()));
    CHECK(ntri == static_cast<int>(m.triangles.size()));
    CHECK(nfac == static_cast<int>(m.boundary_facets.size()));
    std::remove(path.c_str());
}
