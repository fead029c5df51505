#include "draw3/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace draw3 {
namespace {

constexpr double kPi = 3.14159265358979323846;

struct CameraFrame {
    Point3 origin;
    Point3 right, up, forward;
};

CameraFrame camera_frame(const CameraPose& pose) {
    Point3 forward = normalized(pose.look_at - pose.position);
    Point3 side = cross(forward, pose.up);
    if (norm(side) < 1e-12)
        throw std::invalid_argument("camera up vector parallel to view direction");
    Point3 right = normalized(side);
    Point3 up = cross(right, forward);
    return {pose.position, right, up, forward};
}

struct Segment {
    double u0, v0, u1, v1;
    double depth;       // mean camera-space depth, painter's sort key
    std::size_t curve;  // tie-breaks keep the draw order deterministic
    std::size_t seq;
};

// de Casteljau split at t = 0.5
void split_curve(const BezierCurve& c, BezierCurve& left, BezierCurve& right) {
    Point3 m01 = (c.p0 + c.p1) * 0.5;
    Point3 m12 = (c.p1 + c.p2) * 0.5;
    Point3 m23 = (c.p2 + c.p3) * 0.5;
    Point3 m012 = (m01 + m12) * 0.5;
    Point3 m123 = (m12 + m23) * 0.5;
    Point3 mid = (m012 + m123) * 0.5;
    left = {c.p0, m01, m012, mid};
    right = {mid, m123, m23, c.p3};
}

double point_to_segment_distance_2d(double px, double py, double ax, double ay, double bx,
                                    double by) {
    double dx = bx - ax, dy = by - ay;
    double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) return std::hypot(px - ax, py - ay);
    double t = ((px - ax) * dx + (py - ay) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

struct Flattener {
    const CameraPose& pose;
    const RenderOptions& options;
    std::size_t curve_index;
    std::vector<Segment>& out;
    std::size_t seq = 0;

    void flatten(const BezierCurve& c, int depth) {
        std::optional<Projected> q0 = project(c.p0, pose);
        std::optional<Projected> q1 = project(c.p1, pose);
        std::optional<Projected> q2 = project(c.p2, pose);
        std::optional<Projected> q3 = project(c.p3, pose);
        if (q0 && q1 && q2 && q3) {
            double dev1 = point_to_segment_distance_2d(q1->u, q1->v, q0->u, q0->v, q3->u, q3->v);
            double dev2 = point_to_segment_distance_2d(q2->u, q2->v, q0->u, q0->v, q3->u, q3->v);
            if (std::max(dev1, dev2) < options.flatten_tolerance_px ||
                depth >= options.max_subdivision_depth) {
                out.push_back({q0->u, q0->v, q3->u, q3->v, 0.5 * (q0->depth + q3->depth),
                               curve_index, seq++});
                return;
            }
        } else {
            // Some control point at or behind the near plane. Subdivide until the
            // behind-camera part is isolated, then drop it.
            if (depth >= options.max_subdivision_depth || (!q0 && !q3)) return;
        }
        BezierCurve left, right;
        split_curve(c, left, right);
        flatten(left, depth + 1);
        flatten(right, depth + 1);
    }
};

void draw_segment(RenderedView& view, const Segment& s, const StrokeStyle& stroke) {
    double half = stroke.width_px * 0.5;
    double reach = half + 0.5;
    int x0 = static_cast<int>(std::floor(std::min(s.u0, s.u1) - reach - 1.0));
    int x1 = static_cast<int>(std::ceil(std::max(s.u0, s.u1) + reach + 1.0));
    int y0 = static_cast<int>(std::floor(std::min(s.v0, s.v1) - reach - 1.0));
    int y1 = static_cast<int>(std::ceil(std::max(s.v0, s.v1) + reach + 1.0));
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, view.width - 1);
    y1 = std::min(y1, view.height - 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            double d = point_to_segment_distance_2d(x + 0.5, y + 0.5, s.u0, s.v0, s.u1, s.v1);
            double coverage = std::clamp(half + 0.5 - d, 0.0, 1.0);
            if (coverage <= 0.0) continue;
            double alpha = stroke.color[3] * coverage;
            std::size_t base = (static_cast<std::size_t>(y) * view.width + x) * 4;
            for (int c = 0; c < 3; ++c)
                view.pixels[base + c] =
                    alpha * stroke.color[static_cast<std::size_t>(c)] + (1.0 - alpha) * view.pixels[base + c];
            view.pixels[base + 3] = alpha + (1.0 - alpha) * view.pixels[base + 3];
        }
    }
}

}  // namespace

CameraRig default_rig(const RigParams& params) {
    if (params.radius <= 0.0) throw std::invalid_argument("rig radius must be positive");
    if (params.elevations_deg.size() != 2)
        throw std::invalid_argument("rig expects exactly two elevation rings");
    CameraRig rig;
    rig.poses.reserve(kViewCount);
    for (double elev_deg : params.elevations_deg) {
        double e = elev_deg * kPi / 180.0;
        for (int k = 0; k < 8; ++k) {
            double a = (45.0 * k) * kPi / 180.0;
            CameraPose pose;
            pose.position = {params.radius * std::cos(e) * std::cos(a),
                             params.radius * std::cos(e) * std::sin(a),
                             params.radius * std::sin(e)};
            pose.look_at = {0.0, 0.0, 0.0};
            pose.up = {0.0, 0.0, 1.0};
            pose.focal_px = params.focal_px;
            pose.canvas = params.canvas;
            rig.poses.push_back(pose);
        }
    }
    // The drawing volume must stay in front of the near plane from every
    // pose. Geometry outside the frame is simply clipped at raster time.
    for (const CameraPose& pose : rig.poses) {
        for (int corner = 0; corner < 8; ++corner) {
            Point3 p{(corner & 1) ? 0.8 : -0.8, (corner & 2) ? 0.8 : -0.8,
                     (corner & 4) ? 0.8 : -0.8};
            if (!project(p, pose))
                throw std::invalid_argument("rig radius too small: drawing bounds reach the camera");
        }
    }
    return rig;
}

std::optional<Projected> project(const Point3& point, const CameraPose& pose) {
    CameraFrame frame = camera_frame(pose);
    Point3 d = point - frame.origin;
    double z = dot(d, frame.forward);
    if (z <= kNearPlane) return std::nullopt;
    double x = dot(d, frame.right);
    double y = dot(d, frame.up);
    double cx = pose.canvas.width * 0.5;
    double cy = pose.canvas.height * 0.5;
    return Projected{cx + pose.focal_px * x / z, cy - pose.focal_px * y / z, z};
}

RenderedView render_view(const Sketch& sketch, const CameraPose& pose, int pose_index,
                         const RenderOptions& options) {
    RenderedView view;
    view.width = pose.canvas.width;
    view.height = pose.canvas.height;
    view.pose_index = pose_index;
    view.pixels.resize(static_cast<std::size_t>(view.width) * view.height * 4);
    for (std::size_t i = 0; i < view.pixels.size(); ++i)
        view.pixels[i] = options.stroke.background[i % 4];

    CameraFrame frame = camera_frame(pose);
    std::vector<Segment> segments;
    for (std::size_t ci = 0; ci < sketch.curve_count(); ++ci) {
        const BezierCurve& curve = sketch.curves[ci];
        bool all_behind = true;
        for (int i = 0; i < 4; ++i)
            if (dot(curve.control(i) - frame.origin, frame.forward) > kNearPlane) all_behind = false;
        if (all_behind) continue;  // convex hull entirely behind the near plane
        Flattener f{pose, options, ci, segments};
        f.flatten(curve, 0);
    }

    std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
        if (a.depth != b.depth) return a.depth > b.depth;  // farthest first
        if (a.curve != b.curve) return a.curve < b.curve;
        return a.seq < b.seq;
    });
    for (const Segment& s : segments) draw_segment(view, s, options.stroke);
    return view;
}

std::vector<RenderedView> render(const Sketch& sketch, const CameraRig& rig,
                                 const RenderOptions& options) {
    if (rig.poses.size() != kViewCount)
        throw std::invalid_argument("rig must contain exactly 16 poses");
    std::vector<RenderedView> views(rig.poses.size());
    int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < rig.poses.size(); ++i)
            views[i] = render_view(sketch, rig.poses[i], static_cast<int>(i), options);
        return views;
    }
    std::vector<std::thread> workers;
    std::size_t per_worker = (rig.poses.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
        std::size_t begin = static_cast<std::size_t>(w) * per_worker;
        std::size_t end = std::min(begin + per_worker, rig.poses.size());
        if (begin >= end) break;
        workers.emplace_back([&, begin, end] {
            for (std::size_t i = begin; i < end; ++i)
                views[i] = render_view(sketch, rig.poses[i], static_cast<int>(i), options);
        });
    }
    for (auto& t : workers) t.join();
    return views;
}

std::size_t inked_pixel_count(const RenderedView& view) {
    std::size_t count = 0;
    const double threshold = 1.0 - 0.5 / 255.0;
    for (std::size_t i = 0; i < view.pixels.size(); i += 4)
        if (view.pixels[i] < threshold || view.pixels[i + 1] < threshold ||
            view.pixels[i + 2] < threshold)
            ++count;
    return count;
}

}  // namespace draw3
