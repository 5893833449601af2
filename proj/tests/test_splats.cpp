#include <cmath>

#include "avdiff/splats.hpp"
#include "doctest.h"

using namespace avdiff;

TEST_CASE("bind_splats honors count, weights, and determinism") {
    BodyTemplate tpl = make_humanoid_template();
    const AppearanceSpec& app = appearance_from_id("woman_yellow_dress");
    AvatarSplats s = bind_splats(tpl, app, 500, 42);
    CHECK(s.count() == 500);
    for (int i = 0; i < s.count(); ++i) {
        float sum = 0.0f;
        for (int k = 0; k < kNumJoints; ++k) {
            float w = s.skin_weights[static_cast<std::size_t>(i) * kNumJoints + k];
            CHECK(w >= 0.0f);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0f).epsilon(1e-6));
        CHECK(s.radii[i] > 0.0f);
        CHECK(s.opacities[i] > 0.0f);
        CHECK(s.opacities[i] <= 1.0f);
    }

    AvatarSplats again = bind_splats(tpl, app, 500, 42);
    for (int i = 0; i < s.count(); ++i) {
        CHECK(s.centers[i].x == again.centers[i].x);
        CHECK(s.radii[i] == again.radii[i]);
        CHECK(s.colors[i].y == again.colors[i].y);
    }
    AvatarSplats other = bind_splats(tpl, app, 500, 43);
    bool differs = false;
    for (int i = 0; i < s.count() && !differs; ++i) {
        if (s.centers[i].x != other.centers[i].x) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("each splat copies the skin weights of its nearest template vertex") {
    BodyTemplate tpl = make_humanoid_template();
    AvatarSplats s = bind_splats(tpl, appearance_from_id("man_white_shirt"), 64, 7);
    for (int i = 0; i < s.count(); ++i) {
        // Find the actual nearest vertex.
        int best = 0;
        float best_d = 1e9f;
        for (int v = 0; v < tpl.vertex_count(); ++v) {
            const float d = norm(tpl.rest_vertices[v] - s.centers[i]);
            if (d < best_d) {
                best_d = d;
                best = v;
            }
        }
        for (int k = 0; k < kNumJoints; ++k) {
            CHECK(s.skin_weights[static_cast<std::size_t>(i) * kNumJoints + k] ==
                  tpl.skin_weights[static_cast<std::size_t>(best) * kNumJoints + k]);
        }
    }
}

TEST_CASE("bind_splats rejects bad input") {
    BodyTemplate tpl = make_humanoid_template();
    const AppearanceSpec& app = known_appearances()[0];
    CHECK_THROWS_AS(bind_splats(tpl, app, 0, 1), ContractError);
    BodyTemplate empty;
    CHECK_THROWS_AS(bind_splats(empty, app, 10, 1), ContractError);
    CHECK_THROWS_AS(appearance_from_id("man_in_the_moon"), ConfigError);
}

TEST_CASE("identity pose keeps rest centers; root translation shifts them") {
    BodyTemplate tpl = make_humanoid_template();
    AvatarSplats s = bind_splats(tpl, known_appearances()[0], 200, 3);
    auto rest = skin_splats(s, tpl, BodyParams::rest());
    for (int i = 0; i < s.count(); ++i) {
        CHECK(rest[i].x == doctest::Approx(s.centers[i].x).epsilon(1e-6));
        CHECK(rest[i].y == doctest::Approx(s.centers[i].y).epsilon(1e-6));
    }
    const Vec3 t{1.5f, -0.25f, 0.75f};
    auto moved = skin_splats(s, tpl, BodyParams::rest(), t);
    for (int i = 0; i < s.count(); ++i) {
        CHECK(moved[i].x == doctest::Approx(rest[i].x + t.x).epsilon(1e-5));
        CHECK(moved[i].y == doctest::Approx(rest[i].y + t.y).epsilon(1e-5));
        CHECK(moved[i].z == doctest::Approx(rest[i].z + t.z).epsilon(1e-5));
    }
}

TEST_CASE("rotating the root rotates splat centers rigidly") {
    BodyTemplate tpl = make_humanoid_template();
    AvatarSplats s = bind_splats(tpl, known_appearances()[1], 150, 11);
    BodyParams p = BodyParams::rest();
    const Mat3 r = axis_angle({0.0f, 0.0f, 1.0f}, 0.9f);
    p.set_rotation(kPelvis, r);
    const std::array<float, kShapeCoeffs> zero_beta{};
    const Vec3 root = joint_rest_positions(tpl, zero_beta)[kPelvis];
    auto posed = skin_splats(s, tpl, p);
    for (int i = 0; i < s.count(); ++i) {
        const Vec3 expect = root + r * (s.centers[i] - root);
        CHECK(posed[i].x == doctest::Approx(expect.x).epsilon(1e-4));
        CHECK(posed[i].y == doctest::Approx(expect.y).epsilon(1e-4));
        CHECK(posed[i].z == doctest::Approx(expect.z).epsilon(1e-4));
    }
}
