#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

#include "draw3/png_io.hpp"
#include "draw3/render.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using draw3::CameraPose;
using draw3::CameraRig;
using draw3::Point3;
using draw3::RenderedView;
using draw3::Sketch;

namespace {

double max_pixel_delta(const RenderedView& a, const RenderedView& b) {
    REQUIRE(a.pixels.size() == b.pixels.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        worst = std::max(worst, std::abs(a.pixels[i] - b.pixels[i]));
    return worst;
}

}  // namespace

TEST_CASE("default rig geometry") {
    CameraRig rig = draw3::default_rig();
    REQUIRE(rig.poses.size() == draw3::kViewCount);
    for (int i = 0; i < draw3::kViewCount; ++i) {
        const CameraPose& p = rig.poses[i];
        CHECK(draw3::norm(p.position) == doctest::Approx(2.5).epsilon(1e-12));
        CHECK(p.look_at == Point3{0, 0, 0});
        CHECK(p.up == Point3{0, 0, 1});
        CHECK(p.focal_px == 907.32);
        CHECK(p.canvas.width == 512);
        CHECK(p.canvas.height == 512);
        double elev = std::asin(p.position.z / 2.5) * 180.0 / 3.14159265358979323846;
        CHECK(elev == doctest::Approx(i < 8 ? 20.0 : -10.0).epsilon(1e-9));
    }
    // Adjacent azimuths in a ring are 45 degrees apart.
    for (int i = 0; i < 7; ++i) {
        Point3 a = rig.poses[i].position, b = rig.poses[i + 1].position;
        double aa = std::atan2(a.y, a.x), ab = std::atan2(b.y, b.x);
        CHECK(std::fmod(ab - aa + 2 * 3.14159265358979323846, 2 * 3.14159265358979323846) ==
              doctest::Approx(3.14159265358979323846 / 4).epsilon(1e-9));
    }
}

TEST_CASE("rig rejects a radius inside the drawing volume") {
    draw3::RigParams params;
    params.radius = 1.0;
    CHECK_THROWS_AS(draw3::default_rig(params), std::invalid_argument);
}

TEST_CASE("origin projects to the canvas center from every rig pose") {
    CameraRig rig = draw3::default_rig();
    for (const CameraPose& pose : rig.poses) {
        auto q = draw3::project({0, 0, 0}, pose);
        REQUIRE(q.has_value());
        CHECK(std::abs(q->u - 256.0) < 1e-6);
        CHECK(std::abs(q->v - 256.0) < 1e-6);
        CHECK(q->depth == doctest::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("project matches the homogeneous matrix oracle") {
    CameraRig rig = draw3::default_rig();
    std::mt19937 rng(99);
    for (const CameraPose& pose : rig.poses) {
        oracle::HomogeneousProjector ref(pose);
        for (int i = 0; i < 200; ++i) {
            Point3 p = oracle::random_point(rng);
            auto q = draw3::project(p, pose);
            double u, v, depth;
            bool visible = ref.project(p, u, v, depth);
            REQUIRE(q.has_value() == visible);
            if (!visible) continue;
            CHECK(std::abs(q->u - u) < 1e-9);
            CHECK(std::abs(q->v - v) < 1e-9);
            CHECK(std::abs(q->depth - depth) < 1e-9);
        }
    }
}

TEST_CASE("points behind the camera do not project") {
    CameraPose pose;
    pose.position = {2.5, 0, 0};
    pose.look_at = {0, 0, 0};
    CHECK_FALSE(draw3::project({3.0, 0, 0}, pose).has_value());
    CHECK_FALSE(draw3::project({2.5, 0, 0}, pose).has_value());
    CHECK(draw3::project({2.4, 0, 0}, pose).has_value());
}

TEST_CASE("rendered views are always 16 at 512x512") {
    CameraRig rig = draw3::default_rig();
    auto views = draw3::render(fixtures::sparse_planar_sketch(), rig);
    REQUIRE(views.size() == 16);
    for (int i = 0; i < 16; ++i) {
        CHECK(views[i].width == 512);
        CHECK(views[i].height == 512);
        CHECK(views[i].pose_index == i);
        CHECK(views[i].pixels.size() == 512u * 512u * 4u);
    }
    CameraRig truncated = rig;
    truncated.poses.resize(7);
    CHECK_THROWS_AS(draw3::render(Sketch{}, truncated), std::invalid_argument);
}

TEST_CASE("straight curve rasterizes within 1.5 px of the projected chord") {
    Sketch s;
    s.curves.push_back(fixtures::straight({-0.5, -0.2, -0.3}, {0.5, 0.3, 0.2}));
    CameraRig rig = draw3::default_rig();
    const CameraPose& pose = rig.poses[0];
    RenderedView view = draw3::render_view(s, pose, 0);

    auto q0 = draw3::project(s.curves[0].p0, pose);
    auto q3 = draw3::project(s.curves[0].p3, pose);
    REQUIRE(q0.has_value());
    REQUIRE(q3.has_value());
    std::size_t inked = 0;
    for (int y = 0; y < view.height; ++y) {
        for (int x = 0; x < view.width; ++x) {
            if (view.channel(x, y, 0) >= 1.0 - 0.5 / 255.0) continue;
            ++inked;
            double dx = q3->u - q0->u, dy = q3->v - q0->v;
            double len2 = dx * dx + dy * dy;
            double t = ((x + 0.5 - q0->u) * dx + (y + 0.5 - q0->v) * dy) / len2;
            t = std::clamp(t, 0.0, 1.0);
            double d = std::hypot(x + 0.5 - (q0->u + t * dx), y + 0.5 - (q0->v + t * dy));
            CHECK(d < 1.5);
        }
    }
    CHECK(inked > 100);
}

TEST_CASE("x-mirror symmetric sketch matches the mirrored pose flipped") {
    // The box is symmetric under x -> -x; azimuth 45 deg mirrors to 135 deg.
    Sketch box = fixtures::box_sketch();
    CameraRig rig = draw3::default_rig();
    RenderedView a = draw3::render_view(box, rig.poses[1], 1);
    RenderedView b = draw3::render_view(box, rig.poses[3], 3);
    double worst = 0.0;
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x)
            for (int c = 0; c < 3; ++c)
                worst = std::max(worst,
                                 std::abs(a.channel(x, y, c) - b.channel(a.width - 1 - x, y, c)));
    CHECK(worst <= 2.0 / 255.0);
}

TEST_CASE("rotating the sketch 45 degrees about Z shifts the view ring by one") {
    Sketch box = fixtures::box_sketch(0.4);
    double cs = std::cos(3.14159265358979323846 / 4), sn = std::sin(3.14159265358979323846 / 4);
    Sketch rotated = box;
    for (auto& c : rotated.curves) {
        for (Point3* p : {&c.p0, &c.p1, &c.p2, &c.p3}) {
            double x = cs * p->x - sn * p->y;
            double y = sn * p->x + cs * p->y;
            p->x = x;
            p->y = y;
        }
    }
    CameraRig rig = draw3::default_rig();
    RenderedView base = draw3::render_view(box, rig.poses[2], 2);
    RenderedView shifted = draw3::render_view(rotated, rig.poses[3], 3);
    CHECK(max_pixel_delta(base, shifted) <= 2.0 / 255.0);
}

TEST_CASE("rendering is bit-deterministic across runs and job counts") {
    Sketch box = fixtures::box_sketch();
    CameraRig rig = draw3::default_rig();
    draw3::RenderOptions serial;
    serial.jobs = 1;
    draw3::RenderOptions parallel;
    parallel.jobs = 8;
    auto run1 = draw3::render(box, rig, serial);
    auto run2 = draw3::render(box, rig, serial);
    auto run3 = draw3::render(box, rig, parallel);
    for (int i = 0; i < 16; ++i) {
        CHECK(run1[i].pixels == run2[i].pixels);
        CHECK(run1[i].pixels == run3[i].pixels);
    }
}

TEST_CASE("inked pixel counts behave monotonically") {
    CameraRig rig = draw3::default_rig();
    RenderedView empty = draw3::render_view(Sketch{}, rig.poses[0], 0);
    CHECK(draw3::inked_pixel_count(empty) == 0);

    Sketch one;
    one.curves.push_back(fixtures::straight({-0.4, 0, 0}, {0.4, 0, 0}));
    RenderedView single = draw3::render_view(one, rig.poses[0], 0);
    RenderedView full = draw3::render_view(fixtures::box_sketch(), rig.poses[0], 0);
    CHECK(draw3::inked_pixel_count(single) > 0);
    CHECK(draw3::inked_pixel_count(full) > draw3::inked_pixel_count(single));
}

TEST_CASE("degenerate curves leave almost no ink") {
    Point3 p{0.2, 0.1, -0.1};
    Sketch s;
    s.curves.push_back({p, p, p, p});
    CameraRig rig = draw3::default_rig();
    RenderedView view = draw3::render_view(s, rig.poses[0], 0);
    CHECK(draw3::inked_pixel_count(view) < 20);
}

TEST_CASE("png encode and decode round trip") {
    Sketch box = fixtures::box_sketch();
    CameraRig rig = draw3::default_rig();
    RenderedView view = draw3::render_view(box, rig.poses[5], 5);
    draw3::Image8 img = draw3::quantize(view);
    auto bytes = draw3::encode_png(img);
    auto bytes2 = draw3::encode_png(img);
    CHECK(bytes == bytes2);
    draw3::Image8 back = draw3::decode_png(bytes);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.rgba == img.rgba);
}

TEST_CASE("view filenames are zero padded") {
    CHECK(draw3::view_filename(0) == "view_00.png");
    CHECK(draw3::view_filename(7) == "view_07.png");
    CHECK(draw3::view_filename(15) == "view_15.png");
}
