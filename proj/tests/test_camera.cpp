#include <cmath>

#include "avdiff/camera.hpp"
#include "doctest.h"

using namespace avdiff;

TEST_CASE("points on the optical axis project to the principal point") {
    Camera cam;
    cam.position = {0, 0, 0};
    cam.look_at = {0, 0, 1};
    cam.focal = 100.0f;
    cam.width = 200;
    cam.height = 160;
    for (float depth : {0.5f, 2.0f, 40.0f}) {
        Projection p = project(cam, {0, 0, depth});
        CHECK(p.u == doctest::Approx(100.0f));
        CHECK(p.v == doctest::Approx(80.0f));
        CHECK(p.depth == doctest::Approx(depth));
    }
}

TEST_CASE("projection formula matches the hand computation") {
    Camera cam;
    cam.position = {0, 0, 0};
    cam.look_at = {0, 0, 1};
    cam.focal = 100.0f;
    cam.width = 200;
    cam.height = 200;
    Projection p = project(cam, {1, 0, 2});
    CHECK(p.u == doctest::Approx(150.0f));  // cx + 100 * 1/2
    CHECK(p.v == doctest::Approx(100.0f));
    // Image v grows downward: a point above the axis has v < cy.
    Projection above = project(cam, {0, 1, 2});
    CHECK(above.v == doctest::Approx(50.0f));
}

TEST_CASE("points behind the camera raise an error") {
    Camera cam;
    cam.position = {0, 0, 0};
    cam.look_at = {0, 0, 1};
    CHECK_THROWS_AS(project(cam, {0, 0, -1}), BehindCameraError);
    CHECK_THROWS_AS(project(cam, {0, 0, 0}), BehindCameraError);
}

TEST_CASE("degenerate camera frames are rejected") {
    Camera cam;
    cam.position = {0, 2, 0};
    cam.look_at = {0, 0, 0};
    cam.up = {0, 1, 0};  // parallel to the view direction
    CHECK_THROWS_AS(project(cam, {1, 0, 0}), DegeneracyError);
    Camera same;
    same.position = same.look_at = {1, 1, 1};
    CHECK_THROWS_AS(project(same, {0, 0, 0}), DegeneracyError);
}

TEST_CASE("orbit 360 closes the loop") {
    TrajectorySpec spec = parse_trajectory_spec("orbit:360");
    auto cams = camera_trajectory(spec, {0, 1, 0}, 9, 70.0f, 64, 64);
    REQUIRE(cams.size() == 9);
    CHECK(std::abs(cams.front().position.x - cams.back().position.x) < 1e-5f);
    CHECK(std::abs(cams.front().position.z - cams.back().position.z) < 1e-5f);
}

TEST_CASE("orbit 180 with three frames puts the middle camera at 90 degrees") {
    TrajectorySpec spec = parse_trajectory_spec("orbit:180");
    spec.dist_start = 2.0f;
    auto cams = camera_trajectory(spec, {0, 0, 0}, 3, 70.0f, 64, 64);
    CHECK(cams[1].position.x == doctest::Approx(2.0f).epsilon(1e-5));
    CHECK(cams[1].position.z == doctest::Approx(0.0f).epsilon(1e-5));
    CHECK(cams[2].position.z == doctest::Approx(-2.0f).epsilon(1e-5));
}

TEST_CASE("zoom_in distance decreases strictly and geometrically") {
    TrajectorySpec spec = parse_trajectory_spec("zoom_in:4.0..2.0");
    auto cams = camera_trajectory(spec, {0, 1, 0}, 8, 70.0f, 64, 64);
    float prev = 1e9f;
    for (const Camera& c : cams) {
        const float d = norm(c.position - c.look_at);
        CHECK(d < prev);
        prev = d;
    }
    // Geometric interpolation: the middle of an odd split is sqrt(start*end).
    auto three = camera_trajectory(spec, {0, 0, 0}, 3, 70.0f, 64, 64);
    CHECK(three[1].position.z == doctest::Approx(std::sqrt(8.0f)).epsilon(1e-5));
}

TEST_CASE("trajectory spec grammar") {
    CHECK(parse_trajectory_spec("static").kind == TrajectoryKind::Static);
    CHECK(parse_trajectory_spec("orbit:60").total_angle_deg == doctest::Approx(60.0f));
    TrajectorySpec z = parse_trajectory_spec("zoom_out:2.5..5.0");
    CHECK(z.kind == TrajectoryKind::ZoomOut);
    CHECK(z.dist_start == doctest::Approx(2.5f));
    CHECK(z.dist_end == doctest::Approx(5.0f));

    CHECK_THROWS_AS(parse_trajectory_spec("warp:9"), ConfigError);
    CHECK_THROWS_AS(parse_trajectory_spec("orbit:"), ConfigError);
    CHECK_THROWS_AS(parse_trajectory_spec("zoom_in:2.0..4.0"), ConfigError);
    CHECK_THROWS_AS(parse_trajectory_spec("zoom_in:4.0"), ConfigError);
    CHECK_THROWS_AS(parse_trajectory_spec("zoom_out:-1.0..2.0"), ConfigError);
    CHECK_THROWS_AS(camera_trajectory(parse_trajectory_spec("static"), {0, 0, 0}, 1, 70.0f, 64,
                                      64),
                    ConfigError);
}
