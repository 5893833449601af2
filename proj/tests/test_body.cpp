#include <array>
#include <cmath>
#include <vector>

#include "avdiff/body.hpp"
#include "doctest.h"

using namespace avdiff;

namespace {

Mat3 rot_from_6(std::array<float, 6> r) {
    return rot6d_to_matrix(std::span<const float, 6>(r.data(), 6));
}

bool mat_close(const Mat3& a, const Mat3& b, float tol = 1e-5f) {
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (std::abs(a.m[i][j] - b.m[i][j]) > tol) return false;
        }
    }
    return true;
}

float det(const Mat3& r) {
    return r.m[0][0] * (r.m[1][1] * r.m[2][2] - r.m[1][2] * r.m[2][1]) -
           r.m[0][1] * (r.m[1][0] * r.m[2][2] - r.m[1][2] * r.m[2][0]) +
           r.m[0][2] * (r.m[1][0] * r.m[2][1] - r.m[1][1] * r.m[2][0]);
}

// Minimal template with marker vertices pinned to each joint, for
// hand-computable kinematics. Chain hierarchy 0 -> 1 -> ... -> 23.
BodyTemplate make_chain_template() {
    BodyTemplate tpl;
    for (int k = 0; k < kNumJoints; ++k) {
        tpl.parent[k] = k - 1;
        tpl.rest_vertices.push_back({static_cast<float>(k), 0.0f, 0.0f});
    }
    const int V = tpl.vertex_count();
    tpl.joint_regressor.assign(static_cast<std::size_t>(kNumJoints) * V, 0.0f);
    for (int k = 0; k < kNumJoints; ++k) {
        tpl.joint_regressor[static_cast<std::size_t>(k) * V + k] = 1.0f;
    }
    tpl.skin_weights.assign(static_cast<std::size_t>(V) * kNumJoints, 0.0f);
    for (int v = 0; v < V; ++v) tpl.skin_weights[v * kNumJoints + v] = 1.0f;
    tpl.shape_basis.assign(static_cast<std::size_t>(V) * 3 * kShapeCoeffs, 0.0f);
    tpl.pose_basis.assign(static_cast<std::size_t>(V) * 3 * kPoseFeatures, 0.0f);
    tpl.expr_basis.assign(static_cast<std::size_t>(V) * 3 * kExprCoeffs, 0.0f);
    tpl.pose_feature_proj.assign(kPoseFeatures * (kNumJoints - 1) * 9, 0.0f);
    tpl.region.assign(V, BodyRegion::Torso);
    return tpl;
}

}  // namespace

TEST_CASE("rot6d canonical cases") {
    CHECK(mat_close(rot_from_6({1, 0, 0, 0, 1, 0}), Mat3::identity()));

    // Columns (0,1,0) and (-1,0,0) give a 90 degree rotation about z.
    Mat3 r = rot_from_6({0, 1, 0, -1, 0, 0});
    Mat3 expect;
    expect.m = {{{0, -1, 0}, {1, 0, 0}, {0, 0, 1}}};
    CHECK(mat_close(r, expect));

    // Scaling is removed by normalization.
    CHECK(mat_close(rot_from_6({2, 0, 0, 0, 3, 0}), Mat3::identity()));
}

TEST_CASE("rot6d rejects degenerate input") {
    CHECK_THROWS_AS(rot_from_6({0, 0, 0, 0, 1, 0}), DegeneracyError);
    CHECK_THROWS_AS(rot_from_6({1, 0, 0, 2, 0, 0}), DegeneracyError);
    CHECK_THROWS_AS(rot_from_6({1, 0, 0, 0, 0, 0}), DegeneracyError);
}

TEST_CASE("rot6d outputs are orthonormal with unit determinant") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::array<float, 6> r;
        for (float& v : r) v = rng.normal();
        Mat3 m;
        try {
            m = rot_from_6(r);
        } catch (const DegeneracyError&) {
            continue;
        }
        Mat3 mtm = m.transposed() * m;
        CHECK(mat_close(mtm, Mat3::identity(), 1e-5f));
        CHECK(det(m) == doctest::Approx(1.0f).epsilon(1e-5));
    }
}

TEST_CASE("shaped_template at rest reproduces the rest vertices exactly") {
    BodyTemplate tpl = make_humanoid_template();
    auto verts = shaped_template(tpl, BodyParams::rest());
    REQUIRE(verts.size() == tpl.rest_vertices.size());
    for (std::size_t v = 0; v < verts.size(); ++v) {
        CHECK(verts[v].x == tpl.rest_vertices[v].x);
        CHECK(verts[v].y == tpl.rest_vertices[v].y);
        CHECK(verts[v].z == tpl.rest_vertices[v].z);
    }
}

TEST_CASE("shaped_template is linear in beta") {
    BodyTemplate tpl = make_humanoid_template();
    BodyParams rest = BodyParams::rest();
    const std::array<float, kExprCoeffs> zero_psi{};

    std::array<float, kShapeCoeffs> e1{1, 0, 0, 0};
    std::array<float, kShapeCoeffs> e2{0, 1, 0, 0};
    std::array<float, kShapeCoeffs> mix{0.5f, -0.5f, 0, 0};
    auto base = shaped_template(tpl, std::array<float, kShapeCoeffs>{}, rest, zero_psi);
    auto v1 = shaped_template(tpl, e1, rest, zero_psi);
    auto v2 = shaped_template(tpl, e2, rest, zero_psi);
    auto vm = shaped_template(tpl, mix, rest, zero_psi);

    for (std::size_t v = 0; v < base.size(); ++v) {
        // beta = e1 adds exactly the first shape basis column.
        const std::size_t sb = v * 3 * kShapeCoeffs;
        CHECK(v1[v].x - base[v].x ==
              doctest::Approx(tpl.shape_basis[sb + 0 * kShapeCoeffs]).epsilon(1e-5));
        // Linear combination matches the combination of the parts.
        Vec3 expect = base[v] + (v1[v] - base[v]) * 0.5f + (v2[v] - base[v]) * -0.5f;
        CHECK(vm[v].x == doctest::Approx(expect.x).epsilon(1e-4));
        CHECK(vm[v].y == doctest::Approx(expect.y).epsilon(1e-4));
        CHECK(vm[v].z == doctest::Approx(expect.z).epsilon(1e-4));
    }

    CHECK_THROWS_AS(shaped_template(tpl, std::span<const float>(e1.data(), 2), rest, zero_psi),
                    DimError);
}

TEST_CASE("shaped_template is linear in psi") {
    BodyTemplate tpl = make_humanoid_template();
    BodyParams rest = BodyParams::rest();
    const std::array<float, kShapeCoeffs> zero_beta{};
    auto base = shaped_template(tpl, zero_beta, rest, std::array<float, kExprCoeffs>{});
    auto p1 = shaped_template(tpl, zero_beta, rest, std::array<float, kExprCoeffs>{1, 0});
    auto p2 = shaped_template(tpl, zero_beta, rest, std::array<float, kExprCoeffs>{0, 1});
    auto pm = shaped_template(tpl, zero_beta, rest, std::array<float, kExprCoeffs>{0.3f, 0.6f});
    for (std::size_t v = 0; v < base.size(); ++v) {
        Vec3 expect = base[v] + (p1[v] - base[v]) * 0.3f + (p2[v] - base[v]) * 0.6f;
        CHECK(pm[v].x == doctest::Approx(expect.x).epsilon(1e-4));
        CHECK(pm[v].y == doctest::Approx(expect.y).epsilon(1e-4));
    }
}

TEST_CASE("forward kinematics at rest places joints at J(beta)") {
    BodyTemplate tpl = make_humanoid_template();
    const std::array<float, kShapeCoeffs> zero_beta{};
    auto joints = joint_rest_positions(tpl, zero_beta);
    auto world = forward_kinematics(tpl, BodyParams::rest());
    for (int k = 0; k < kNumJoints; ++k) {
        CHECK(world[k].trans.x == doctest::Approx(joints[k].x).epsilon(1e-5));
        CHECK(world[k].trans.y == doctest::Approx(joints[k].y).epsilon(1e-5));
        CHECK(world[k].trans.z == doctest::Approx(joints[k].z).epsilon(1e-5));
    }
}

TEST_CASE("rotating the root rigidly rotates every joint") {
    BodyTemplate tpl = make_humanoid_template();
    const std::array<float, kShapeCoeffs> zero_beta{};
    auto joints = joint_rest_positions(tpl, zero_beta);
    BodyParams p = BodyParams::rest();
    const Mat3 rz = axis_angle({0, 0, 1}, 3.14159265f / 2.0f);
    p.set_rotation(kPelvis, rz);
    auto world = forward_kinematics(tpl, p);
    for (int k = 0; k < kNumJoints; ++k) {
        Vec3 expect = joints[0] + rz * (joints[k] - joints[0]);
        CHECK(world[k].trans.x == doctest::Approx(expect.x).epsilon(1e-4));
        CHECK(world[k].trans.y == doctest::Approx(expect.y).epsilon(1e-4));
        CHECK(world[k].trans.z == doctest::Approx(expect.z).epsilon(1e-4));
    }
}

TEST_CASE("two-joint chain: parent bent 90 degrees moves the child sideways") {
    BodyTemplate tpl = make_chain_template();
    BodyParams p = BodyParams::rest();
    // Joint 5 at (5,0,0), child 6 at offset (1,0,0); bend joint 5 by z+90.
    p.set_rotation(5, axis_angle({0, 0, 1}, 3.14159265f / 2.0f));
    auto world = forward_kinematics(tpl, p);
    CHECK(world[6].trans.x == doctest::Approx(5.0f).epsilon(1e-5));
    CHECK(world[6].trans.y == doctest::Approx(1.0f).epsilon(1e-5));
    CHECK(world[6].trans.z == doctest::Approx(0.0f).epsilon(1e-5));
}

TEST_CASE("cyclic hierarchy is rejected") {
    BodyTemplate tpl = make_chain_template();
    tpl.parent[3] = 7;  // joint 7 descends from 3, so this is a cycle
    CHECK_THROWS_AS(forward_kinematics(tpl, BodyParams::rest()), ContractError);
}

TEST_CASE("lbs with identity pose is the identity on shaped vertices") {
    BodyTemplate tpl = make_humanoid_template();
    BodyParams p = BodyParams::rest();
    p.beta = {0.4f, -0.3f, 0.2f, 0.1f};
    p.psi = {0.5f, -0.2f};
    auto shaped = shaped_template(tpl, p);
    auto posed = lbs(tpl, p);
    REQUIRE(posed.size() == shaped.size());
    for (std::size_t v = 0; v < posed.size(); ++v) {
        CHECK(posed[v].x == doctest::Approx(shaped[v].x).epsilon(1e-5));
        CHECK(posed[v].y == doctest::Approx(shaped[v].y).epsilon(1e-5));
        CHECK(posed[v].z == doctest::Approx(shaped[v].z).epsilon(1e-5));
    }
}

TEST_CASE("half-turn about z flips a bound vertex's offset") {
    BodyTemplate tpl = make_chain_template();
    BodyParams p = BodyParams::rest();
    p.set_rotation(4, axis_angle({0, 0, 1}, 3.14159265f));
    auto transforms = skinning_transforms(tpl, p);
    // Vertex at rest offset (1,0,0) from joint 4 (which sits at (4,0,0)).
    std::vector<Vec3> pts{{5.0f, 0.0f, 0.0f}};
    std::vector<float> w(kNumJoints, 0.0f);
    w[4] = 1.0f;
    auto out = apply_lbs(pts, w, transforms);
    CHECK(out[0].x == doctest::Approx(3.0f).epsilon(1e-4));  // 4 - 1
    CHECK(out[0].y == doctest::Approx(0.0f).epsilon(1e-4));
}

TEST_CASE("equal weights on identity and translated transforms average the motion") {
    std::array<Affine, kNumJoints> transforms{};
    transforms[1].trans = {2.0f, 0.0f, 0.0f};
    std::vector<Vec3> pts{{0.5f, 1.0f, -1.0f}};
    std::vector<float> w(kNumJoints, 0.0f);
    w[0] = 0.5f;
    w[1] = 0.5f;
    auto out = apply_lbs(pts, w, transforms);
    CHECK(out[0].x == doctest::Approx(1.5f));
    CHECK(out[0].y == doctest::Approx(1.0f));
    CHECK(out[0].z == doctest::Approx(-1.0f));
}

TEST_CASE("pure root translation shifts every vertex") {
    BodyTemplate tpl = make_humanoid_template();
    auto base = lbs(tpl, BodyParams::rest());
    auto moved = lbs(tpl, BodyParams::rest(), Vec3{0.3f, -0.1f, 2.0f});
    for (std::size_t v = 0; v < base.size(); ++v) {
        CHECK(moved[v].x == doctest::Approx(base[v].x + 0.3f).epsilon(1e-5));
        CHECK(moved[v].y == doctest::Approx(base[v].y - 0.1f).epsilon(1e-5));
        CHECK(moved[v].z == doctest::Approx(base[v].z + 2.0f).epsilon(1e-5));
    }
}

TEST_CASE("humanoid skin weight rows are a partition of unity") {
    BodyTemplate tpl = make_humanoid_template();
    const int V = tpl.vertex_count();
    CHECK(V >= 500);
    CHECK(V <= 700);
    for (int v = 0; v < V; ++v) {
        float sum = 0.0f;
        for (int k = 0; k < kNumJoints; ++k) {
            float w = tpl.skin_weights[static_cast<std::size_t>(v) * kNumJoints + k];
            CHECK(w >= 0.0f);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0f).epsilon(1e-6));
    }
}

TEST_CASE("lbs is invariant under a parentage-preserving joint permutation") {
    BodyTemplate tpl = make_humanoid_template();
    BodyParams p = BodyParams::rest();
    p.set_rotation(kLShoulder, axis_angle({0, 0, 1}, 0.7f));
    p.set_rotation(kRHip, axis_angle({1, 0, 0}, -0.5f));
    p.beta = {0.2f, 0.1f, -0.2f, 0.0f};
    auto reference = lbs(tpl, p, Vec3{0.1f, 0.0f, 0.5f});

    // Swap two sibling subtree roots plus a leaf; keep the root at index 0.
    std::array<int, kNumJoints> perm{};
    for (int k = 0; k < kNumJoints; ++k) perm[k] = k;
    std::swap(perm[kLShoulder], perm[kRHip]);
    std::swap(perm[kLWrist], perm[kHead]);

    BodyTemplate tp = tpl;
    BodyParams pp = p;
    const int V = tpl.vertex_count();
    for (int k = 0; k < kNumJoints; ++k) {
        const int nk = perm[k];
        const int old_parent = tpl.parent[k];
        tp.parent[nk] = old_parent == -1 ? -1 : perm[old_parent];
        for (int v = 0; v < V; ++v) {
            tp.skin_weights[static_cast<std::size_t>(v) * kNumJoints + nk] =
                tpl.skin_weights[static_cast<std::size_t>(v) * kNumJoints + k];
        }
        for (int v = 0; v < V; ++v) {
            tp.joint_regressor[static_cast<std::size_t>(nk) * V + v] =
                tpl.joint_regressor[static_cast<std::size_t>(k) * V + v];
        }
        std::copy(p.pose.begin() + k * 6, p.pose.begin() + k * 6 + 6, pp.pose.begin() + nk * 6);
        if (k > 0 && nk > 0) {
            const int cols = (kNumJoints - 1) * 9;
            for (int f = 0; f < kPoseFeatures; ++f) {
                for (int e = 0; e < 9; ++e) {
                    tp.pose_feature_proj[f * cols + (nk - 1) * 9 + e] =
                        tpl.pose_feature_proj[f * cols + (k - 1) * 9 + e];
                }
            }
        }
    }
    auto permuted = lbs(tp, pp, Vec3{0.1f, 0.0f, 0.5f});
    for (std::size_t v = 0; v < reference.size(); ++v) {
        CHECK(permuted[v].x == doctest::Approx(reference[v].x).epsilon(1e-5));
        CHECK(permuted[v].y == doctest::Approx(reference[v].y).epsilon(1e-5));
        CHECK(permuted[v].z == doctest::Approx(reference[v].z).epsilon(1e-5));
    }
}
