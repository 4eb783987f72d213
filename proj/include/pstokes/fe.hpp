#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pstokes/mesh.hpp"

// Taylor-Hood spaces on a triangulation: P2 vector velocity, P1 pressure,
// and a facet-wise discontinuous P1 boundary multiplier.  Scalar P2 nodes
// are the vertices followed by the edge midpoints; a velocity DOF is
// 2*node + component.

namespace pstokes {

enum class BcMode { Strong, Weak };

struct BasisEval {
    // values[i], grads[i] of the shape functions at one reference point
    std::vector<double> values;
    std::vector<Eigen::Vector2d> grads;
};

/// P1 shape functions on the reference triangle.
inline BasisEval eval_basis_p1(const Eigen::Vector2d& xi) {
    const double x = xi.x(), y = xi.y();
    if (x < -1e-12 || y < -1e-12 || x + y > 1.0 + 1e-12)
        throw std::invalid_argument("eval_basis_p1: point outside reference triangle");
    BasisEval b;
    b.values = {1.0 - x - y, x, y};
    b.grads = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};
    return b;
}

/// P2 shape functions: vertex nodes 0..2, then midpoints of local edges
/// (0,1), (1,2), (2,0).
inline BasisEval eval_basis_p2(const Eigen::Vector2d& xi) {
    const double x = xi.x(), y = xi.y();
    if (x < -1e-12 || y < -1e-12 || x + y > 1.0 + 1e-12)
        throw std::invalid_argument("eval_basis_p2: point outside reference triangle");
    const double l0 = 1.0 - x - y, l1 = x, l2 = y;
    const Eigen::Vector2d g0(-1.0, -1.0), g1(1.0, 0.0), g2(0.0, 1.0);
    BasisEval b;
    b.values = {l0 * (2.0 * l0 - 1.0), l1 * (2.0 * l1 - 1.0), l2 * (2.0 * l2 - 1.0),
                4.0 * l0 * l1,         4.0 * l1 * l2,         4.0 * l2 * l0};
    b.grads = {(4.0 * l0 - 1.0) * g0,
               (4.0 * l1 - 1.0) * g1,
               (4.0 * l2 - 1.0) * g2,
               4.0 * (l0 * g1 + l1 * g0),
               4.0 * (l1 * g2 + l2 * g1),
               4.0 * (l2 * g0 + l0 * g2)};
    return b;
}

struct StrongComponent {
    int dof;        // velocity DOF index
    int node;       // scalar P2 node
    int comp;       // 0 or 1
    bool corner;    // both components fixed at corners
};

struct FeSystem {
    const Triangulation* mesh = nullptr;
    BcMode bc_mode = BcMode::Strong;

    int n_nodes = 0;       // scalar P2 nodes = vertices + edges
    int n_velocity = 0;    // 2 * n_nodes
    int n_pressure = 0;    // vertex count
    int n_multiplier = 0;  // 2 per boundary facet in Weak mode

    std::vector<std::array<int, 3>> tri_edges;   // local edges (0,1),(1,2),(2,0)
    std::vector<StrongComponent> strong;         // empty in Weak mode
    std::vector<std::pair<int, double>> constrained;  // (dof, prescribed value)
    bool mean_zero_pressure = true;

    int vertex_count() const { return static_cast<int>(mesh->vertices.size()); }
    int node_of_edge(int e) const { return vertex_count() + e; }
    int velocity_dof(int node, int comp) const { return 2 * node + comp; }

    Eigen::Vector2d node_coord(int node) const {
        const int nv = vertex_count();
        if (node < nv) return mesh->vertices[node];
        const Edge& ed = mesh->edges[node - nv];
        return 0.5 * (mesh->vertices[ed.v[0]] + mesh->vertices[ed.v[1]]);
    }

    /// P2 scalar nodes of triangle t in local order.
    std::array<int, 6> p2_nodes(int t) const {
        const Triangle& tr = mesh->triangles[t];
        const auto& te = tri_edges[t];
        return {tr.v[0], tr.v[1], tr.v[2], node_of_edge(te[0]), node_of_edge(te[1]),
                node_of_edge(te[2])};
    }
};

using VelocityField = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;

/// Prescribed values for the strong constraint set, interpolating `exact`
/// at the constrained boundary nodes.
inline std::vector<std::pair<int, double>> strong_constraint_values(
    const FeSystem& fe, const VelocityField& exact) {
    std::vector<std::pair<int, double>> vals;
    vals.reserve(fe.strong.size());
    for (const StrongComponent& s : fe.strong) {
        const Eigen::Vector2d x = fe.node_coord(s.node);
        vals.emplace_back(s.dof, exact ? exact(x)[s.comp] : 0.0);
    }
    return vals;
}

inline FeSystem build_fe_system(const Triangulation& mesh, BcMode bc,
                                const VelocityField& normal_data = nullptr,
                                bool inhomogeneous = false) {
    if (bc == BcMode::Strong && inhomogeneous && !normal_data)
        throw std::invalid_argument("build_fe_system: inhomogeneous data requires normal_data");

    FeSystem fe;
    fe.mesh = &mesh;
    fe.bc_mode = bc;
    const int nv = static_cast<int>(mesh.vertices.size());
    const int ne = static_cast<int>(mesh.edges.size());
    fe.n_nodes = nv + ne;
    fe.n_velocity = 2 * fe.n_nodes;
    fe.n_pressure = nv;
    fe.n_multiplier = bc == BcMode::Weak ? 2 * static_cast<int>(mesh.boundary_facets.size()) : 0;

    std::map<std::array<int, 2>, int> edge_of;
    for (int e = 0; e < ne; ++e) edge_of.emplace(mesh.edges[e].v, e);
    fe.tri_edges.resize(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tr = mesh.triangles[t];
        for (int e = 0; e < 3; ++e) {
            std::array<int, 2> key{tr.v[e], tr.v[(e + 1) % 3]};
            if (key[0] > key[1]) std::swap(key[0], key[1]);
            fe.tri_edges[t][e] = edge_of.at(key);
        }
    }

    if (bc == BcMode::Strong) {
        // boundary nodes and their constrained components; a node shared by
        // facets with distinct normals (a corner) gets both components
        std::map<int, std::vector<int>> node_comps;  // node -> constrained comps
        auto add = [&](int node, int comp) {
            auto& cs = node_comps[node];
            if (std::find(cs.begin(), cs.end(), comp) == cs.end()) cs.push_back(comp);
        };
        for (const BoundaryFacet& f : mesh.boundary_facets) {
            const Edge& ed = mesh.edges[f.edge];
            const int comp = std::abs(f.normal.x()) > 0.5 ? 0 : 1;
            add(ed.v[0], comp);
            add(ed.v[1], comp);
            add(fe.node_of_edge(f.edge), comp);
        }
        for (auto& [node, comps] : node_comps) {
            const bool corner = node < nv && mesh.is_corner[node];
            if (corner) comps = {0, 1};
            for (int c : comps)
                fe.strong.push_back({fe.velocity_dof(node, c), node, c, corner});
        }
        fe.constrained = strong_constraint_values(fe, normal_data);
    }
    return fe;
}

}  // namespace pstokes
