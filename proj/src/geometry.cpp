#include "draw3/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace draw3 {

bool Point3::finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
}

Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Point3 operator*(const Point3& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
Point3 operator*(double s, const Point3& a) { return a * s; }
bool operator==(const Point3& a, const Point3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }

double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

Point3 cross(const Point3& a, const Point3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

double norm(const Point3& a) { return std::sqrt(dot(a, a)); }
double distance(const Point3& a, const Point3& b) { return norm(a - b); }

Point3 normalized(const Point3& a) {
    double n = norm(a);
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return a * (1.0 / n);
}

const Point3& BezierCurve::control(int i) const {
    switch (i) {
        case 0: return p0;
        case 1: return p1;
        case 2: return p2;
        default: return p3;
    }
}

bool BezierCurve::valid() const {
    return p0.finite() && p1.finite() && p2.finite() && p3.finite();
}

Point3 evaluate(const BezierCurve& curve, double t) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("bezier parameter outside [0,1]");
    double u = 1.0 - t;
    double b0 = u * u * u;
    double b1 = 3.0 * u * u * t;
    double b2 = 3.0 * u * t * t;
    double b3 = t * t * t;
    return curve.p0 * b0 + curve.p1 * b1 + curve.p2 * b2 + curve.p3 * b3;
}

std::vector<Point3> sample_polyline(const BezierCurve& curve, int segments) {
    if (segments < 1) throw std::invalid_argument("segments must be >= 1");
    std::vector<Point3> points;
    points.reserve(static_cast<std::size_t>(segments) + 1);
    for (int k = 0; k <= segments; ++k) {
        if (k == 0) {
            points.push_back(curve.p0);
        } else if (k == segments) {
            points.push_back(curve.p3);
        } else {
            points.push_back(evaluate(curve, static_cast<double>(k) / segments));
        }
    }
    return points;
}

bool is_degenerate(const BezierCurve& curve, double epsilon) {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    double max_dist = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            max_dist = std::max(max_dist, distance(curve.control(i), curve.control(j)));
    return max_dist < epsilon;
}

double pairwise_curve_similarity(const Sketch& sketch, int samples_per_curve) {
    if (sketch.curve_count() < 2) return 0.0;
    if (samples_per_curve < 2) throw std::invalid_argument("samples_per_curve must be >= 2");

    const std::size_t n = sketch.curve_count();
    std::vector<std::vector<Point3>> samples(n);
    for (std::size_t i = 0; i < n; ++i) {
        samples[i].reserve(static_cast<std::size_t>(samples_per_curve));
        for (int k = 0; k < samples_per_curve; ++k) {
            double t = static_cast<double>(k) / (samples_per_curve - 1);
            samples[i].push_back(evaluate(sketch.curves[i], t));
        }
    }

    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double d = 0.0;
            for (int k = 0; k < samples_per_curve; ++k)
                d += distance(samples[i][k], samples[j][k]);
            d /= samples_per_curve;
            sum += 1.0 / (1.0 + d);
            ++pairs;
        }
    }
    return sum / static_cast<double>(pairs);
}

}  // namespace draw3
