#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

#include "avdiff/render.hpp"
#include "avdiff/rng.hpp"
#include "doctest.h"

using namespace avdiff;

namespace {
Camera test_camera(int w = 65, int h = 65, float focal = 80.0f) {
    Camera cam;
    cam.position = {0, 0, 0};
    cam.look_at = {0, 0, 1};
    cam.focal = focal;
    cam.width = w;
    cam.height = h;
    return cam;
}
}  // namespace

TEST_CASE("no visible splats give an exactly black frame") {
    Camera cam = test_camera();
    std::vector<WorldSplat> splats;
    splats.push_back({{0, 0, -2}, 0.1f, {1, 0, 0}, 1.0f});  // behind camera, culled
    RenderResult r = render_frame(splats, cam);
    for (float v : r.rgb.values()) CHECK(v == 0.0f);
    for (float v : r.alpha.values()) CHECK(v == 0.0f);
}

TEST_CASE("single splat matches the direct footprint evaluation") {
    Camera cam = test_camera(65, 65, 80.0f);
    const WorldSplat splat{{0, 0, 2}, 0.05f, {0.8f, 0.4f, 0.2f}, 0.9f};
    RenderResult r = render_frame(std::vector<WorldSplat>{splat}, cam);

    const double sigma = 80.0 * 0.05 / 2.0;  // focal * radius / depth
    const double cu = 32.5, cv = 32.5;
    double brightest = -1.0;
    int brightest_px = -1;
    for (int i = 0; i < 65; ++i) {
        for (int j = 0; j < 65; ++j) {
            const double dx = (j + 0.5) - cu;
            const double dy = (i + 0.5) - cv;
            const double d_sq = dx * dx + dy * dy;
            const double g =
                d_sq > 9.0 * sigma * sigma ? 0.0 : std::exp(-d_sq / (2.0 * sigma * sigma));
            const double expect_r = 0.9 * g * 0.8;
            const float got_r = r.rgb.data()[(i * 65 + j) * 3 + 0];
            CHECK(std::abs(got_r - expect_r) < 1e-5);
            const float got_a = r.alpha.data()[i * 65 + j];
            CHECK(std::abs(got_a - 0.9 * g) < 1e-5);
            if (got_r > brightest) {
                brightest = got_r;
                brightest_px = i * 65 + j;
            }
        }
    }
    // Principal point pixel (32, 32) is the brightest.
    CHECK(brightest_px == 32 * 65 + 32);
}

TEST_CASE("pixels outside every footprint are exactly black") {
    Camera cam = test_camera();
    const WorldSplat splat{{0, 0, 2}, 0.01f, {1, 1, 1}, 1.0f};
    RenderResult r = render_frame(std::vector<WorldSplat>{splat}, cam);
    // sigma = 0.4px, so anything beyond ~2px from center is untouched.
    CHECK(r.rgb.data()[(0 * 65 + 0) * 3] == 0.0f);
    CHECK(r.rgb.data()[(10 * 65 + 32) * 3] == 0.0f);
    CHECK(r.alpha.data()[5] == 0.0f);
}

TEST_CASE("compositing order: the nearer opaque splat wins the overlap") {
    Camera cam = test_camera();
    WorldSplat red{{0, 0, 2}, 0.05f, {1, 0, 0}, 1.0f};
    WorldSplat blue{{0, 0, 3}, 0.05f, {0, 0, 1}, 1.0f};

    RenderResult r1 = render_frame(std::vector<WorldSplat>{red, blue}, cam);
    const int center = (32 * 65 + 32) * 3;
    CHECK(r1.rgb.data()[center + 0] == doctest::Approx(1.0f));
    CHECK(r1.rgb.data()[center + 2] == doctest::Approx(0.0f).epsilon(1e-6));

    // Swap depths: blue moves in front.
    red.center = {0, 0, 3};
    blue.center = {0, 0, 2};
    RenderResult r2 = render_frame(std::vector<WorldSplat>{red, blue}, cam);
    CHECK(r2.rgb.data()[center + 2] == doctest::Approx(1.0f));
    CHECK(r2.rgb.data()[center + 0] == doctest::Approx(0.0f).epsilon(1e-6));
}

TEST_CASE("rendering is independent of splat input order") {
    Camera cam = test_camera(64, 64, 70.0f);
    Rng rng(5);
    std::vector<WorldSplat> splats;
    for (int i = 0; i < 40; ++i) {
        splats.push_back({{rng.uniform(-0.5f, 0.5f), rng.uniform(-0.5f, 0.5f),
                           rng.uniform(1.5f, 4.0f)},
                          rng.uniform(0.02f, 0.08f),
                          {rng.uniform(0.1f, 1.0f), rng.uniform(0.1f, 1.0f),
                           rng.uniform(0.1f, 1.0f)},
                          rng.uniform(0.3f, 1.0f)});
    }
    RenderResult a = render_frame(splats, cam);
    std::vector<WorldSplat> shuffled(splats.rbegin(), splats.rend());
    std::rotate(shuffled.begin(), shuffled.begin() + 13, shuffled.end());
    RenderResult b = render_frame(shuffled, cam);
    for (std::size_t i = 0; i < a.rgb.size(); ++i) CHECK(a.rgb.data()[i] == b.rgb.data()[i]);
}

TEST_CASE("rigid transform of splats and camera leaves the frame unchanged") {
    Camera cam = test_camera(48, 48, 60.0f);
    cam.position = {0.2f, 1.1f, 3.0f};
    cam.look_at = {0.0f, 1.0f, 0.0f};
    Rng rng(9);
    std::vector<WorldSplat> splats;
    for (int i = 0; i < 30; ++i) {
        splats.push_back({{rng.uniform(-0.4f, 0.4f), rng.uniform(0.5f, 1.6f),
                           rng.uniform(-0.3f, 0.3f)},
                          rng.uniform(0.02f, 0.06f),
                          {rng.uniform(0.1f, 1.0f), rng.uniform(0.1f, 1.0f),
                           rng.uniform(0.1f, 1.0f)},
                          rng.uniform(0.4f, 1.0f)});
    }
    RenderResult base = render_frame(splats, cam);

    const Mat3 rot = axis_angle(normalized(Vec3{0.3f, 1.0f, -0.2f}), 1.1f);
    const Vec3 shift{2.0f, -0.5f, 1.5f};
    std::vector<WorldSplat> moved = splats;
    for (auto& s : moved) s.center = rot * s.center + shift;
    Camera cam2 = cam;
    cam2.position = rot * cam.position + shift;
    cam2.look_at = rot * cam.look_at + shift;
    cam2.up = rot * cam.up;
    RenderResult transformed = render_frame(moved, cam2);

    for (std::size_t i = 0; i < base.rgb.size(); ++i) {
        CHECK(std::abs(base.rgb.data()[i] - transformed.rgb.data()[i]) < 1e-5f);
    }
}

TEST_CASE("disjoint opaque footprints compose as independent paintings") {
    Camera cam = test_camera(64, 64, 70.0f);
    WorldSplat left{{-0.6f, 0, 2}, 0.03f, {0.9f, 0.2f, 0.1f}, 1.0f};
    WorldSplat right{{0.6f, 0, 2}, 0.03f, {0.1f, 0.2f, 0.9f}, 1.0f};
    RenderResult both = render_frame(std::vector<WorldSplat>{left, right}, cam);
    RenderResult only_l = render_frame(std::vector<WorldSplat>{left}, cam);
    RenderResult only_r = render_frame(std::vector<WorldSplat>{right}, cam);
    for (std::size_t i = 0; i < both.rgb.size(); ++i) {
        CHECK(both.rgb.data()[i] ==
              doctest::Approx(only_l.rgb.data()[i] + only_r.rgb.data()[i]).epsilon(1e-6));
    }
}

TEST_CASE("ppm output carries the expected header and quantized bytes") {
    Tensor img(Shape{2, 3, 3});
    img.data()[0] = 1.0f;   // (0,0) red
    img.data()[4] = 0.5f;   // (0,1) green
    auto path = std::filesystem::temp_directory_path() / "avdiff_render_test.ppm";
    write_ppm(img, path);
    std::string bytes = read_file_bytes(path);
    CHECK(bytes.substr(0, 2) == "P6");
    CHECK(bytes.find("3 2") != std::string::npos);
    const std::size_t data_pos = bytes.find("255\n") + 4;
    CHECK(static_cast<unsigned char>(bytes[data_pos]) == 255);
    CHECK(static_cast<unsigned char>(bytes[data_pos + 4]) == 128);
}

TEST_CASE("stack_video and video_frame invert each other") {
    Rng rng(3);
    std::vector<Tensor> frames;
    for (int f = 0; f < 3; ++f) frames.push_back(Tensor::randn(Shape{4, 5, 3}, rng));
    Tensor video = stack_video(frames);
    CHECK(video.shape() == Shape{3, 4, 5, 3});
    Tensor f1 = video_frame(video, 1);
    for (std::size_t i = 0; i < f1.size(); ++i) CHECK(f1.data()[i] == frames[1].data()[i]);
}
