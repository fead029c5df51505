// Test-only reference implementations, kept independent of the library code
// paths they check.
#pragma once

#include <array>
#include <cmath>
#include <random>

#include "draw3/geometry.hpp"
#include "draw3/render.hpp"

namespace oracle {

// Bezier evaluation by repeated linear interpolation (de Casteljau).
inline draw3::Point3 lerp(const draw3::Point3& a, const draw3::Point3& b, double t) {
    return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t, a.z + (b.z - a.z) * t};
}

inline draw3::Point3 de_casteljau(const draw3::BezierCurve& c, double t) {
    draw3::Point3 q0 = lerp(c.p0, c.p1, t);
    draw3::Point3 q1 = lerp(c.p1, c.p2, t);
    draw3::Point3 q2 = lerp(c.p2, c.p3, t);
    draw3::Point3 r0 = lerp(q0, q1, t);
    draw3::Point3 r1 = lerp(q1, q2, t);
    return lerp(r0, r1, t);
}

// Subdivision at t=0.5; the midpoint of the control polygon collapse is the
// curve point at t=0.5.
inline draw3::Point3 midpoint_by_subdivision(const draw3::BezierCurve& c) {
    return de_casteljau(c, 0.5);
}

// Barycentric coordinates of p with respect to the tetrahedron (a,b,c,d).
// Returns false when the tetrahedron is (near-)degenerate.
inline bool barycentric(const draw3::Point3& p, const draw3::Point3& a, const draw3::Point3& b,
                        const draw3::Point3& c, const draw3::Point3& d,
                        std::array<double, 4>& coords) {
    using draw3::Point3;
    Point3 e1 = b - a, e2 = c - a, e3 = d - a, rhs = p - a;
    double det = draw3::dot(e1, draw3::cross(e2, e3));
    if (std::abs(det) < 1e-9) return false;
    double w1 = draw3::dot(rhs, draw3::cross(e2, e3)) / det;
    double w2 = draw3::dot(e1, draw3::cross(rhs, e3)) / det;
    double w3 = draw3::dot(e1, draw3::cross(e2, rhs)) / det;
    coords = {1.0 - w1 - w2 - w3, w1, w2, w3};
    return true;
}

// Independent pinhole pipeline: explicit 4x4 look-at view matrix followed by
// an intrinsic matrix, all in homogeneous coordinates.
struct HomogeneousProjector {
    std::array<std::array<double, 4>, 4> view{};
    double fx, fy, cx, cy;

    explicit HomogeneousProjector(const draw3::CameraPose& pose) {
        using draw3::Point3;
        Point3 f = draw3::normalized(pose.look_at - pose.position);
        Point3 r = draw3::normalized(draw3::cross(f, pose.up));
        Point3 u = draw3::cross(r, f);
        const Point3 rows[3] = {r, u, f};
        for (int i = 0; i < 3; ++i) {
            view[i][0] = rows[i].x;
            view[i][1] = rows[i].y;
            view[i][2] = rows[i].z;
            view[i][3] = -draw3::dot(rows[i], pose.position);
        }
        view[3] = {0, 0, 0, 1};
        fx = fy = pose.focal_px;
        cx = pose.canvas.width * 0.5;
        cy = pose.canvas.height * 0.5;
    }

    bool project(const draw3::Point3& p, double& u, double& v, double& depth) const {
        double in[4] = {p.x, p.y, p.z, 1.0};
        double out[4];
        for (int i = 0; i < 4; ++i) {
            out[i] = 0.0;
            for (int j = 0; j < 4; ++j) out[i] += view[i][j] * in[j];
        }
        depth = out[2];
        if (depth <= draw3::kNearPlane) return false;
        u = cx + fx * out[0] / depth;
        v = cy - fy * out[1] / depth;
        return true;
    }
};

inline draw3::Point3 random_point(std::mt19937& rng, double lo = -0.8, double hi = 0.8) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return {dist(rng), dist(rng), dist(rng)};
}

inline draw3::BezierCurve random_curve(std::mt19937& rng, double lo = -0.8, double hi = 0.8) {
    return {random_point(rng, lo, hi), random_point(rng, lo, hi), random_point(rng, lo, hi),
            random_point(rng, lo, hi)};
}

}  // namespace oracle
