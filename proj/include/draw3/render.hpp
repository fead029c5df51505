#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "draw3/geometry.hpp"

namespace draw3 {

struct Canvas {
    int width = 512;
    int height = 512;
};

struct CameraPose {
    Point3 position;
    Point3 look_at;            // origin by default
    Point3 up{0.0, 0.0, 1.0};  // Z-up
    double focal_px = 907.32;
    Canvas canvas;
};

struct StrokeStyle {
    double width_px = 2.0;
    std::array<double, 4> color{0.1, 0.1, 0.1, 1.0};
    std::array<double, 4> background{1.0, 1.0, 1.0, 1.0};
};

struct RenderedView {
    int width = 0;
    int height = 0;
    int pose_index = 0;
    std::vector<double> pixels;  // RGBA, row-major, channels in [0,1]

    double channel(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 4 + c];
    }
};

constexpr int kViewCount = 16;

struct CameraRig {
    std::vector<CameraPose> poses;  // always 16
};

struct RigParams {
    double radius = 2.5;
    std::vector<double> elevations_deg{20.0, -10.0};  // two 8-pose rings
    double focal_px = 907.32;
    Canvas canvas;
};

// Two elevation rings of 8 azimuths at 45 deg spacing, all looking at the
// origin, up = +Z. Deterministic construction.
CameraRig default_rig(const RigParams& params = {});

struct Projected {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

constexpr double kNearPlane = 1e-3;

// Pinhole projection into pixel coordinates; nullopt when the point is at or
// behind the near plane.
std::optional<Projected> project(const Point3& point, const CameraPose& pose);

struct RenderOptions {
    StrokeStyle stroke;
    double flatten_tolerance_px = 0.25;
    int max_subdivision_depth = 12;
    int jobs = 1;  // views rasterized in parallel; output is identical for any value
};

// Rasterizes one view. Segments are drawn painter's order, farthest first.
RenderedView render_view(const Sketch& sketch, const CameraPose& pose, int pose_index,
                         const RenderOptions& options = {});

// All 16 views of the rig.
std::vector<RenderedView> render(const Sketch& sketch, const CameraRig& rig,
                                 const RenderOptions& options = {});

std::size_t inked_pixel_count(const RenderedView& view);

}  // namespace draw3
