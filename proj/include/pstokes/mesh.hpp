#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Structured triangulations of the unit square: n x n squares, each split
// along the lower-left to upper-right diagonal, plus uniform (red)
// refinement.  Boundary facets carry outward unit normals.

namespace pstokes {

struct Triangle {
    std::array<int, 3> v;  // positively oriented
};

struct Edge {
    std::array<int, 2> v;       // v[0] < v[1]
    std::array<int, 2> tri;     // adjacent triangles, -1 if absent
};

struct BoundaryFacet {
    int edge = -1;
    int tri = -1;               // the unique adjacent triangle
    Eigen::Vector2d normal;     // outward unit normal
};

struct Triangulation {
    std::vector<Eigen::Vector2d> vertices;
    std::vector<Triangle> triangles;
    std::vector<Edge> edges;
    std::vector<BoundaryFacet> boundary_facets;
    std::vector<std::uint8_t> is_corner;  // per vertex
    double h = 0.0;

    double triangle_area(int t) const {
        const auto& tr = triangles[t];
        const Eigen::Vector2d a = vertices[tr.v[0]];
        const Eigen::Vector2d b = vertices[tr.v[1]];
        const Eigen::Vector2d c = vertices[tr.v[2]];
        return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
    }
};

namespace detail {

inline void finalize_topology(Triangulation& m) {
    // unique edges with triangle adjacency
    std::map<std::array<int, 2>, int> edge_index;
    m.edges.clear();
    for (int t = 0; t < static_cast<int>(m.triangles.size()); ++t) {
        if (m.triangle_area(t) <= 0.0)
            throw std::runtime_error("finalize_topology: nonpositive triangle area");
        const auto& tr = m.triangles[t];
        for (int e = 0; e < 3; ++e) {
            std::array<int, 2> key{tr.v[e], tr.v[(e + 1) % 3]};
            if (key[0] > key[1]) std::swap(key[0], key[1]);
            auto it = edge_index.find(key);
            if (it == edge_index.end()) {
                edge_index.emplace(key, static_cast<int>(m.edges.size()));
                m.edges.push_back({key, {t, -1}});
            } else {
                Edge& ed = m.edges[it->second];
                if (ed.tri[1] != -1)
                    throw std::runtime_error("finalize_topology: edge with >2 triangles");
                ed.tri[1] = t;
            }
        }
    }

    m.boundary_facets.clear();
    for (int e = 0; e < static_cast<int>(m.edges.size()); ++e) {
        const Edge& ed = m.edges[e];
        if (ed.tri[1] != -1) continue;
        const Eigen::Vector2d a = m.vertices[ed.v[0]];
        const Eigen::Vector2d b = m.vertices[ed.v[1]];
        Eigen::Vector2d tang = b - a;
        Eigen::Vector2d nrm(tang.y(), -tang.x());
        nrm.normalize();
        // orient outward: away from the adjacent triangle centroid
        const auto& tr = m.triangles[ed.tri[0]];
        const Eigen::Vector2d centroid =
            (m.vertices[tr.v[0]] + m.vertices[tr.v[1]] + m.vertices[tr.v[2]]) / 3.0;
        const Eigen::Vector2d mid = 0.5 * (a + b);
        if (nrm.dot(mid - centroid) < 0.0) nrm = -nrm;
        m.boundary_facets.push_back({e, ed.tri[0], nrm});
    }

    m.h = 0.0;
    for (const Edge& ed : m.edges)
        m.h = std::max(m.h, (m.vertices[ed.v[1]] - m.vertices[ed.v[0]]).norm());

    // corners of the unit square: vertices where two outward normals meet
    m.is_corner.assign(m.vertices.size(), 0);
    for (int v = 0; v < static_cast<int>(m.vertices.size()); ++v) {
        const Eigen::Vector2d& x = m.vertices[v];
        const bool cx = x.x() == 0.0 || x.x() == 1.0;
        const bool cy = x.y() == 0.0 || x.y() == 1.0;
        if (cx && cy) m.is_corner[v] = 1;
    }
}

}  // namespace detail

inline Triangulation build_square_mesh(int n) {
    if (n < 1) throw std::invalid_argument("build_square_mesh: n must be >= 1");
    Triangulation m;
    const int np = n + 1;
    m.vertices.reserve(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j)
        for (int i = 0; i < np; ++i)
            m.vertices.emplace_back(double(i) / n, double(j) / n);
    auto vid = [np](int i, int j) { return j * np + i; };
    m.triangles.reserve(2u * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({{v00, v10, v11}});
            m.triangles.push_back({{v00, v11, v01}});
        }
    }
    detail::finalize_topology(m);
    return m;
}

/// Red refinement: each triangle split into 4 congruent children via edge
/// midpoints; h halves exactly on dyadic coordinates.
inline Triangulation refine_uniform(const Triangulation& mesh) {
    Triangulation m;
    m.vertices = mesh.vertices;
    std::vector<int> midpoint(mesh.edges.size());
    for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
        const Edge& ed = mesh.edges[e];
        midpoint[e] = static_cast<int>(m.vertices.size());
        m.vertices.push_back(0.5 * (mesh.vertices[ed.v[0]] + mesh.vertices[ed.v[1]]));
    }
    std::map<std::array<int, 2>, int> edge_of;
    for (std::size_t e = 0; e < mesh.edges.size(); ++e)
        edge_of.emplace(mesh.edges[e].v, static_cast<int>(e));
    auto mid = [&](int a, int b) {
        std::array<int, 2> key{a, b};
        if (key[0] > key[1]) std::swap(key[0], key[1]);
        return midpoint[edge_of.at(key)];
    };
    m.triangles.reserve(4 * mesh.triangles.size());
    for (const Triangle& tr : mesh.triangles) {
        const int a = tr.v[0], b = tr.v[1], c = tr.v[2];
        const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
        m.triangles.push_back({{a, ab, ca}});
        m.triangles.push_back({{ab, b, bc}});
        m.triangles.push_back({{ca, bc, c}});
        m.triangles.push_back({{ab, bc, ca}});
    }
    detail::finalize_topology(m);
    return m;
}

/// Debug dump: vertices, triangles, and boundary facets with normals.
inline void dump_mesh_csv(const Triangulation& m, const std::string& path) {
    std::ofstream out(path);
    out << "# section,index,a,b,c,d\n";
    out.precision(17);
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
        out << "vertex," << i << ',' << m.vertices[i].x() << ',' << m.vertices[i].y() << ",,\n";
    for (std::size_t i = 0; i < m.triangles.size(); ++i)
        out << "triangle," << i << ',' << m.triangles[i].v[0] << ',' << m.triangles[i].v[1]
            << ',' << m.triangles[i].v[2] << ",\n";
    for (std::size_t i = 0; i < m.boundary_facets.size(); ++i) {
        const BoundaryFacet& f = m.boundary_facets[i];
        out << "facet," << i << ',' << f.edge << ',' << f.normal.x() << ',' << f.normal.y()
            << ',' << f.tri << '\n';
    }
}

}  // namespace pstokes
