#pragma once

#include <cstddef>
#include <vector>

namespace draw3 {

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool finite() const;
};

Point3 operator+(const Point3& a, const Point3& b);
Point3 operator-(const Point3& a, const Point3& b);
Point3 operator*(const Point3& a, double s);
Point3 operator*(double s, const Point3& a);
bool operator==(const Point3& a, const Point3& b);

double dot(const Point3& a, const Point3& b);
Point3 cross(const Point3& a, const Point3& b);
double norm(const Point3& a);
double distance(const Point3& a, const Point3& b);
Point3 normalized(const Point3& a);

// Cubic 3D Bezier curve with four ordered control points.
struct BezierCurve {
    Point3 p0, p1, p2, p3;

    const Point3& control(int i) const;
    bool valid() const;  // all control points finite
};

// An ordered sequence of cubic Bezier curves.
struct Sketch {
    std::vector<BezierCurve> curves;

    std::size_t curve_count() const { return curves.size(); }
    bool empty() const { return curves.empty(); }
};

// Point on the curve at parameter t (Bernstein form).
// Throws std::domain_error when t is outside [0,1].
Point3 evaluate(const BezierCurve& curve, double t);

// segments+1 points, point k at t = k/segments. First is p0, last is p3.
std::vector<Point3> sample_polyline(const BezierCurve& curve, int segments);

// True iff the max pairwise distance among the 4 control points is < epsilon.
bool is_degenerate(const BezierCurve& curve, double epsilon);

constexpr double kDefaultDegeneracyEpsilon = 1e-3;
constexpr int kDefaultAnalyticsSamples = 16;

// Mean over unordered curve pairs of 1/(1+d), where d is the mean distance
// between corresponding samples on a shared t grid of samples_per_curve
// points. Sketches with fewer than 2 curves score 0 by convention.
double pairwise_curve_similarity(const Sketch& sketch, int samples_per_curve = kDefaultAnalyticsSamples);

}  // namespace draw3
