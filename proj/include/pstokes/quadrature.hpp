#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

// Quadrature on the reference triangle {x,y >= 0, x+y <= 1}, the reference
// edge [0,1], and the reference time interval [0,1].  The interior rule is
// exact for polynomials up to degree 6 (degree 8 available for invariance
// checks); triangles touching the origin can be integrated with a graded
// subdivision toward the singular vertex.

namespace pstokes {

struct QuadPoint {
    Eigen::Vector2d x;
    double w;
};

struct QuadratureRule {
    std::vector<QuadPoint> triangle;   // weights sum to 1/2
    std::vector<std::array<double, 2>> edge;  // (node, weight) on [0,1]
    std::vector<std::array<double, 2>> time;  // 3-point Gauss on [0,1]
};

namespace detail {

inline void push_sym3(std::vector<QuadPoint>& pts, double a, double w) {
    // barycentric (a, a, 1-2a) permutations; weight given w.r.t. unit sum
    const double c = 1.0 - 2.0 * a;
    pts.push_back({{a, a}, 0.5 * w});
    pts.push_back({{a, c}, 0.5 * w});
    pts.push_back({{c, a}, 0.5 * w});
}

inline void push_sym6(std::vector<QuadPoint>& pts, double a, double b, double w) {
    const double c = 1.0 - a - b;
    const std::array<std::array<double, 2>, 6> xy{{{a, b}, {b, a}, {a, c}, {c, a}, {b, c}, {c, b}}};
    for (const auto& q : xy) pts.push_back({{q[0], q[1]}, 0.5 * w});
}

}  // namespace detail

/// Dunavant 12-point rule, exact to degree 6.
inline std::vector<QuadPoint> triangle_rule_degree6() {
    std::vector<QuadPoint> pts;
    detail::push_sym3(pts, 0.063089014491502, 0.050844906370207);
    detail::push_sym3(pts, 0.249286745170910, 0.116786275726379);
    detail::push_sym6(pts, 0.053145049844816, 0.310352451033785, 0.082851075618374);
    return pts;
}

/// Dunavant 16-point rule, exact to degree 8.
inline std::vector<QuadPoint> triangle_rule_degree8() {
    std::vector<QuadPoint> pts;
    pts.push_back({{1.0 / 3.0, 1.0 / 3.0}, 0.5 * 0.14431560767778716825});
    detail::push_sym3(pts, 0.45929258829272315603, 0.09509163426728462479);
    detail::push_sym3(pts, 0.17056930775176020662, 0.10321737053471825028);
    detail::push_sym3(pts, 0.05054722831703097545, 0.03245849762319808031);
    detail::push_sym6(pts, 0.26311282963463811342, 0.72849239295540428124, 0.02723031417443499426);
    return pts;
}

inline std::vector<std::array<double, 2>> gauss_rule_unit(int n) {
    // Gauss-Legendre on [0,1]
    std::vector<std::array<double, 2>> r;
    switch (n) {
        case 3: {
            const double s = std::sqrt(3.0 / 5.0);
            r = {{0.5 * (1.0 - s), 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 * (1.0 + s), 5.0 / 18.0}};
            break;
        }
        case 4: {
            const double x1 = 0.3399810435848563, x2 = 0.8611363115940526;
            const double w1 = 0.6521451548625461, w2 = 0.3478548451374538;
            r = {{0.5 * (1.0 - x2), 0.5 * w2},
                 {0.5 * (1.0 - x1), 0.5 * w1},
                 {0.5 * (1.0 + x1), 0.5 * w1},
                 {0.5 * (1.0 + x2), 0.5 * w2}};
            break;
        }
        case 5: {
            const double x1 = 0.5384693101056831, x2 = 0.9061798459386640;
            const double w0 = 0.5688888888888889, w1 = 0.4786286704993665, w2 = 0.2369268850561891;
            r = {{0.5 * (1.0 - x2), 0.5 * w2},
                 {0.5 * (1.0 - x1), 0.5 * w1},
                 {0.5, 0.5 * w0},
                 {0.5 * (1.0 + x1), 0.5 * w1},
                 {0.5 * (1.0 + x2), 0.5 * w2}};
            break;
        }
        default:
            throw std::invalid_argument("gauss_rule_unit: unsupported point count");
    }
    return r;
}

inline QuadratureRule default_quadrature() {
    return {triangle_rule_degree6(), gauss_rule_unit(4), gauss_rule_unit(3)};
}

/// Physical quadrature points of a triangle (a, b, c).  If `graded_at` is
/// 0..2, the triangle is split geometrically toward that vertex (ratio 1/2,
/// `levels` rings) before applying the base rule on each piece; used for the
/// radially singular manufactured data on triangles touching the origin.
inline std::vector<QuadPoint> physical_triangle_points(
    const std::vector<QuadPoint>& base, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
    const Eigen::Vector2d& c, int graded_at = -1, int levels = 12) {
    std::vector<QuadPoint> out;
    auto emit = [&](const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                    const Eigen::Vector2d& p2) {
        const double det =
            (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p1.y() - p0.y()) * (p2.x() - p0.x());
        for (const QuadPoint& q : base) {
            const Eigen::Vector2d x =
                p0 + q.x.x() * (p1 - p0) + q.x.y() * (p2 - p0);
            out.push_back({x, q.w * std::abs(det)});
        }
    };
    if (graded_at < 0) {
        emit(a, b, c);
        return out;
    }
    std::array<Eigen::Vector2d, 3> v{a, b, c};
    std::rotate(v.begin(), v.begin() + graded_at, v.end());  // v[0] is the singular vertex
    Eigen::Vector2d p1 = v[1], p2 = v[2];
    for (int k = 0; k < levels; ++k) {
        const Eigen::Vector2d q1 = v[0] + 0.5 * (p1 - v[0]);
        const Eigen::Vector2d q2 = v[0] + 0.5 * (p2 - v[0]);
        // ring between the current triangle and its half-scale copy
        emit(q1, p1, p2);
        emit(q1, p2, q2);
        p1 = q1;
        p2 = q2;
    }
    emit(v[0], p1, p2);  // innermost triangle, base rule directly
    return out;
}

}  // namespace pstokes
