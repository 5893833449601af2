#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/geom.hpp"
#include "avdiff/rng.hpp"

namespace avdiff {

inline constexpr int kNumJoints = 24;
inline constexpr int kShapeCoeffs = 4;
inline constexpr int kPoseFeatures = 4;
inline constexpr int kExprCoeffs = 2;

// Joint layout of the procedural humanoid. Root is the pelvis.
enum Joint : int {
    kPelvis = 0,
    kSpine1,
    kSpine2,
    kChest,
    kNeck,
    kHead,
    kLCollar,
    kLShoulder,
    kLElbow,
    kLWrist,
    kRCollar,
    kRShoulder,
    kRElbow,
    kRWrist,
    kLHip,
    kLKnee,
    kLAnkle,
    kLFoot,
    kRHip,
    kRKnee,
    kRAnkle,
    kRFoot,
    kLToe,
    kRToe,
};

// Mirror pairs (left, right) for two-actor mirroring and tests.
inline constexpr std::array<std::array<int, 2>, 9> kMirrorPairs = {{
    {kLCollar, kRCollar},
    {kLShoulder, kRShoulder},
    {kLElbow, kRElbow},
    {kLWrist, kRWrist},
    {kLHip, kRHip},
    {kLKnee, kRKnee},
    {kLAnkle, kRAnkle},
    {kLFoot, kRFoot},
    {kLToe, kRToe},
}};

// Body regions used for appearance coloring.
enum class BodyRegion : std::uint8_t {
    Head,
    Hair,
    Torso,
    LeftArm,
    RightArm,
    LeftHand,
    RightHand,
    LeftLeg,
    RightLeg,
    LeftFoot,
    RightFoot,
};

// Rest template plus the linear bases of the parametric body model:
// shaped(v) = rest + Bs(beta) + Bp(theta) + Be(psi), then linear blend
// skinning against the joint transforms. Weight rows are nonnegative and sum
// to 1; the hierarchy is a tree rooted at joint 0.
struct BodyTemplate {
    std::vector<Vec3> rest_vertices;             // V
    std::vector<float> shape_basis;              // V*3*kShapeCoeffs
    std::vector<float> pose_basis;               // V*3*kPoseFeatures
    std::vector<float> expr_basis;               // V*3*kExprCoeffs
    std::vector<float> pose_feature_proj;        // kPoseFeatures * (K-1)*9
    std::vector<float> joint_regressor;          // K*V
    std::vector<float> skin_weights;             // V*K
    std::array<int, kNumJoints> parent{};        // parent[0] == -1
    std::vector<BodyRegion> region;              // V

    int vertex_count() const { return static_cast<int>(rest_vertices.size()); }
};

struct BodyParams {
    std::array<float, kShapeCoeffs> beta{};
    std::array<float, kNumJoints * 6> pose{};  // 6D rotation per joint
    std::array<float, kExprCoeffs> psi{};

    static BodyParams rest() {
        BodyParams p;
        for (int j = 0; j < kNumJoints; ++j) {
            p.pose[j * 6 + 0] = 1.0f;
            p.pose[j * 6 + 4] = 1.0f;
        }
        return p;
    }

    void set_rotation(int joint, const Mat3& r) {
        pose[joint * 6 + 0] = r.m[0][0];
        pose[joint * 6 + 1] = r.m[1][0];
        pose[joint * 6 + 2] = r.m[2][0];
        pose[joint * 6 + 3] = r.m[0][1];
        pose[joint * 6 + 4] = r.m[1][1];
        pose[joint * 6 + 5] = r.m[2][1];
    }
};

// Gram-Schmidt of the two 3-vector columns; third column is their cross
// product. Output is orthonormal with det +1.
inline Mat3 rot6d_to_matrix(std::span<const float, 6> r) {
    const Vec3 a{r[0], r[1], r[2]};
    const Vec3 b{r[3], r[4], r[5]};
    if (norm(a) < 1e-6f) throw DegeneracyError("rot6d: first column is near zero");
    const Vec3 c0 = normalized(a);
    const Vec3 b_perp = b - c0 * dot(c0, b);
    if (norm(b_perp) < 1e-6f) {
        throw DegeneracyError("rot6d: columns are parallel or second column is zero");
    }
    const Vec3 c1 = normalized(b_perp);
    return Mat3::from_columns(c0, c1, cross(c0, c1));
}

inline Mat3 joint_rotation(const BodyParams& p, int joint) {
    return rot6d_to_matrix(std::span<const float, 6>(p.pose.data() + joint * 6, 6));
}

namespace detail {

// Pose blendshape coefficients: fixed projection of the flattened
// (R_joint - I) entries of the non-root joints, so the identity pose
// contributes exactly zero.
inline std::array<float, kPoseFeatures> pose_features(const BodyTemplate& tpl,
                                                      const BodyParams& params) {
    std::array<float, kPoseFeatures> out{};
    const int cols = (kNumJoints - 1) * 9;
    for (int j = 1; j < kNumJoints; ++j) {
        const Mat3 r = joint_rotation(params, j);
        for (int e = 0; e < 9; ++e) {
            float v = r.m[e / 3][e % 3] - (e / 3 == e % 3 ? 1.0f : 0.0f);
            if (v == 0.0f) continue;
            const int col = (j - 1) * 9 + e;
            for (int f = 0; f < kPoseFeatures; ++f) {
                out[f] += tpl.pose_feature_proj[f * cols + col] * v;
            }
        }
    }
    return out;
}

}  // namespace detail

// T(beta, theta, psi): rest template plus the three blendshape contributions.
inline std::vector<Vec3> shaped_template(const BodyTemplate& tpl,
                                         std::span<const float> beta,
                                         const BodyParams& params,
                                         std::span<const float> psi) {
    if (beta.size() != kShapeCoeffs || psi.size() != kExprCoeffs) {
        throw DimError("shaped_template: coefficient length mismatch");
    }
    const int V = tpl.vertex_count();
    const auto pf = detail::pose_features(tpl, params);
    std::vector<Vec3> out(tpl.rest_vertices);
    for (int v = 0; v < V; ++v) {
        float d[3] = {0.0f, 0.0f, 0.0f};
        for (int axis = 0; axis < 3; ++axis) {
            const std::size_t sb = (static_cast<std::size_t>(v) * 3 + axis) * kShapeCoeffs;
            for (int i = 0; i < kShapeCoeffs; ++i) d[axis] += tpl.shape_basis[sb + i] * beta[i];
            const std::size_t pb = (static_cast<std::size_t>(v) * 3 + axis) * kPoseFeatures;
            for (int i = 0; i < kPoseFeatures; ++i) d[axis] += tpl.pose_basis[pb + i] * pf[i];
            const std::size_t eb = (static_cast<std::size_t>(v) * 3 + axis) * kExprCoeffs;
            for (int i = 0; i < kExprCoeffs; ++i) d[axis] += tpl.expr_basis[eb + i] * psi[i];
        }
        out[v] += Vec3{d[0], d[1], d[2]};
    }
    return out;
}

inline std::vector<Vec3> shaped_template(const BodyTemplate& tpl, const BodyParams& params) {
    return shaped_template(tpl, params.beta, params, params.psi);
}

// J(beta): joint rest positions regressed from the shape-only deformed
// template (pose and expression do not move the skeleton).
inline std::array<Vec3, kNumJoints> joint_rest_positions(const BodyTemplate& tpl,
                                                         std::span<const float> beta) {
    BodyParams rest = BodyParams::rest();
    std::copy(beta.begin(), beta.end(), rest.beta.begin());
    const std::array<float, kExprCoeffs> zero_psi{};
    const auto verts = shaped_template(tpl, beta, rest, zero_psi);
    std::array<Vec3, kNumJoints> joints{};
    const int V = tpl.vertex_count();
    for (int k = 0; k < kNumJoints; ++k) {
        Vec3 acc{};
        for (int v = 0; v < V; ++v) {
            const float w = tpl.joint_regressor[static_cast<std::size_t>(k) * V + v];
            if (w != 0.0f) acc += verts[v] * w;
        }
        joints[k] = acc;
    }
    return joints;
}

// World transform per joint: parent world transform composed with the local
// rotation about the joint's rest offset. The root additionally applies the
// frame's root translation.
inline std::array<Affine, kNumJoints> forward_kinematics(const BodyTemplate& tpl,
                                                         const BodyParams& params,
                                                         const Vec3& root_translation = {}) {
    const auto joints = joint_rest_positions(tpl, params.beta);
    std::array<Affine, kNumJoints> world{};
    std::array<bool, kNumJoints> done{};
    int root_count = 0;
    for (int k = 0; k < kNumJoints; ++k) {
        if (tpl.parent[k] == -1) {
            Affine local;
            local.rot = joint_rotation(params, k);
            local.trans = joints[k] + root_translation;
            world[k] = local;
            done[k] = true;
            ++root_count;
        } else if (tpl.parent[k] < 0 || tpl.parent[k] >= kNumJoints || tpl.parent[k] == k) {
            throw ContractError("invalid joint parent index");
        }
    }
    if (root_count != 1) throw ContractError("hierarchy must have exactly one root");
    // Resolve joints as their parents become available; a sweep without
    // progress means the parent links contain a cycle.
    int resolved = root_count;
    while (resolved < kNumJoints) {
        int progress = 0;
        for (int k = 0; k < kNumJoints; ++k) {
            const int p = tpl.parent[k];
            if (done[k] || !done[p]) continue;
            Affine local;
            local.rot = joint_rotation(params, k);
            local.trans = joints[k] - joints[p];
            world[k] = world[p] * local;
            done[k] = true;
            ++progress;
        }
        if (progress == 0) throw ContractError("joint hierarchy contains a cycle");
        resolved += progress;
    }
    return world;
}

// Rest-relative skinning transforms: G'_k = G_k o translate(-j_k), so a
// vertex at the rest joint stays put under the identity pose.
inline std::array<Affine, kNumJoints> skinning_transforms(const BodyTemplate& tpl,
                                                          const BodyParams& params,
                                                          const Vec3& root_translation = {}) {
    const auto joints = joint_rest_positions(tpl, params.beta);
    auto world = forward_kinematics(tpl, params, root_translation);
    for (int k = 0; k < kNumJoints; ++k) {
        world[k].trans = world[k].trans - world[k].rot * joints[k];
    }
    return world;
}

// Applies the weighted skinning transforms to a point set with per-point
// weight rows (rows sum to 1).
inline std::vector<Vec3> apply_lbs(std::span<const Vec3> points,
                                   std::span<const float> weights,
                                   const std::array<Affine, kNumJoints>& transforms) {
    if (weights.size() != points.size() * kNumJoints) {
        throw DimError("apply_lbs: weight row count does not match points");
    }
    std::vector<Vec3> out(points.size());
    for (std::size_t v = 0; v < points.size(); ++v) {
        Vec3 acc{};
        for (int k = 0; k < kNumJoints; ++k) {
            const float w = weights[v * kNumJoints + k];
            if (w == 0.0f) continue;
            acc += (transforms[k] * points[v]) * w;
        }
        out[v] = acc;
    }
    return out;
}

// M(beta, theta, psi): full posed body surface.
inline std::vector<Vec3> lbs(const BodyTemplate& tpl, const BodyParams& params,
                             const Vec3& root_translation = {}) {
    const auto verts = shaped_template(tpl, params);
    const auto transforms = skinning_transforms(tpl, params, root_translation);
    return apply_lbs(verts, tpl.skin_weights, transforms);
}

// ---------------------------------------------------------------------------
// Procedural humanoid template: capsule-sampled limbs around a fixed 24-joint
// skeleton. Fully deterministic.

namespace detail {

struct BoneSpec {
    int weight_joint;   // joint that drives this capsule
    int end_joint;      // -1 when the end is a synthetic extension
    Vec3 start, end;
    float radius;
    BodyRegion region;
    int rings;
    int ring_joint;     // joint whose regressor uses this capsule's first ring; -1 none
    int end_ring_joint; // joint regressed from the last ring; -1 none
};

inline std::array<Vec3, kNumJoints> canonical_joint_positions() {
    std::array<Vec3, kNumJoints> j{};
    j[kPelvis] = {0.0f, 0.95f, 0.0f};
    j[kSpine1] = {0.0f, 1.05f, 0.0f};
    j[kSpine2] = {0.0f, 1.18f, 0.0f};
    j[kChest] = {0.0f, 1.30f, 0.0f};
    j[kNeck] = {0.0f, 1.45f, 0.0f};
    j[kHead] = {0.0f, 1.56f, 0.0f};
    j[kLCollar] = {0.07f, 1.40f, 0.0f};
    j[kLShoulder] = {0.20f, 1.40f, 0.0f};
    j[kLElbow] = {0.46f, 1.40f, 0.0f};
    j[kLWrist] = {0.70f, 1.40f, 0.0f};
    j[kRCollar] = {-0.07f, 1.40f, 0.0f};
    j[kRShoulder] = {-0.20f, 1.40f, 0.0f};
    j[kRElbow] = {-0.46f, 1.40f, 0.0f};
    j[kRWrist] = {-0.70f, 1.40f, 0.0f};
    j[kLHip] = {0.10f, 0.90f, 0.0f};
    j[kLKnee] = {0.10f, 0.50f, 0.0f};
    j[kLAnkle] = {0.10f, 0.10f, 0.0f};
    j[kLFoot] = {0.10f, 0.04f, 0.07f};
    j[kRHip] = {-0.10f, 0.90f, 0.0f};
    j[kRKnee] = {-0.10f, 0.50f, 0.0f};
    j[kRAnkle] = {-0.10f, 0.10f, 0.0f};
    j[kRFoot] = {-0.10f, 0.04f, 0.07f};
    j[kLToe] = {0.10f, 0.03f, 0.15f};
    j[kRToe] = {-0.10f, 0.03f, 0.15f};
    return j;
}

inline std::array<int, kNumJoints> canonical_parents() {
    std::array<int, kNumJoints> p{};
    p[kPelvis] = -1;
    p[kSpine1] = kPelvis;
    p[kSpine2] = kSpine1;
    p[kChest] = kSpine2;
    p[kNeck] = kChest;
    p[kHead] = kNeck;
    p[kLCollar] = kChest;
    p[kLShoulder] = kLCollar;
    p[kLElbow] = kLShoulder;
    p[kLWrist] = kLElbow;
    p[kRCollar] = kChest;
    p[kRShoulder] = kRCollar;
    p[kRElbow] = kRShoulder;
    p[kRWrist] = kRElbow;
    p[kLHip] = kPelvis;
    p[kLKnee] = kLHip;
    p[kLAnkle] = kLKnee;
    p[kLFoot] = kLAnkle;
    p[kRHip] = kPelvis;
    p[kRKnee] = kRHip;
    p[kRAnkle] = kRKnee;
    p[kRFoot] = kRAnkle;
    p[kLToe] = kLFoot;
    p[kRToe] = kRFoot;
    return p;
}

}  // namespace detail

// Builds the desk-scale humanoid (~600 vertices). The construction is a pure
// function; the pose blendshape tables use a fixed internal seed.
inline BodyTemplate make_humanoid_template() {
    using detail::BoneSpec;
    const auto J = detail::canonical_joint_positions();
    const auto parents = detail::canonical_parents();

    auto mirror = [](Vec3 v) { return Vec3{-v.x, v.y, v.z}; };

    std::vector<BoneSpec> bones;
    // Torso stack.
    bones.push_back({kPelvis, kSpine1, J[kPelvis], J[kSpine1], 0.13f, BodyRegion::Torso, 3,
                     kPelvis, kSpine1});
    bones.push_back({kSpine1, kSpine2, J[kSpine1], J[kSpine2], 0.125f, BodyRegion::Torso, 3, -1,
                     kSpine2});
    bones.push_back({kSpine2, kChest, J[kSpine2], J[kChest], 0.12f, BodyRegion::Torso, 3, -1,
                     kChest});
    bones.push_back({kChest, kNeck, J[kChest], J[kNeck], 0.09f, BodyRegion::Torso, 3, -1, kNeck});
    bones.push_back({kNeck, kHead, J[kNeck], J[kHead], 0.045f, BodyRegion::Head, 2, -1, kHead});
    bones.push_back({kHead, -1, J[kHead], J[kHead] + Vec3{0.0f, 0.15f, 0.0f}, 0.085f,
                     BodyRegion::Head, 4, -1, -1});
    // Arms.
    bones.push_back({kLCollar, kLShoulder, J[kLCollar], J[kLShoulder], 0.05f, BodyRegion::Torso,
                     2, kLCollar, kLShoulder});
    bones.push_back({kLShoulder, kLElbow, J[kLShoulder], J[kLElbow], 0.047f, BodyRegion::LeftArm,
                     4, -1, kLElbow});
    bones.push_back({kLElbow, kLWrist, J[kLElbow], J[kLWrist], 0.037f, BodyRegion::LeftArm, 4, -1,
                     kLWrist});
    bones.push_back({kLWrist, -1, J[kLWrist], J[kLWrist] + Vec3{0.10f, 0.0f, 0.0f}, 0.035f,
                     BodyRegion::LeftHand, 2, -1, -1});
    bones.push_back({kRCollar, kRShoulder, J[kRCollar], J[kRShoulder], 0.05f, BodyRegion::Torso,
                     2, kRCollar, kRShoulder});
    bones.push_back({kRShoulder, kRElbow, J[kRShoulder], J[kRElbow], 0.047f, BodyRegion::RightArm,
                     4, -1, kRElbow});
    bones.push_back({kRElbow, kRWrist, J[kRElbow], J[kRWrist], 0.037f, BodyRegion::RightArm, 4,
                     -1, kRWrist});
    bones.push_back({kRWrist, -1, J[kRWrist], J[kRWrist] + Vec3{-0.10f, 0.0f, 0.0f}, 0.035f,
                     BodyRegion::RightHand, 2, -1, -1});
    // Legs.
    bones.push_back({kLHip, kLKnee, J[kLHip], J[kLKnee], 0.075f, BodyRegion::LeftLeg, 5, kLHip,
                     kLKnee});
    bones.push_back({kLKnee, kLAnkle, J[kLKnee], J[kLAnkle], 0.055f, BodyRegion::LeftLeg, 5, -1,
                     kLAnkle});
    bones.push_back({kLAnkle, kLFoot, J[kLAnkle], J[kLFoot], 0.045f, BodyRegion::LeftFoot, 2, -1,
                     kLFoot});
    bones.push_back({kLFoot, kLToe, J[kLFoot], J[kLToe], 0.04f, BodyRegion::LeftFoot, 2, -1,
                     kLToe});
    bones.push_back({kRHip, kRKnee, J[kRHip], J[kRKnee], 0.075f, BodyRegion::RightLeg, 5, kRHip,
                     kRKnee});
    bones.push_back({kRKnee, kRAnkle, J[kRKnee], J[kRAnkle], 0.055f, BodyRegion::RightLeg, 5, -1,
                     kRAnkle});
    bones.push_back({kRAnkle, kRFoot, J[kRAnkle], J[kRFoot], 0.045f, BodyRegion::RightFoot, 2, -1,
                     kRFoot});
    bones.push_back({kRFoot, kRToe, J[kRFoot], J[kRToe], 0.04f, BodyRegion::RightFoot, 2, -1,
                     kRToe});
    (void)mirror;

    BodyTemplate tpl;
    tpl.parent = parents;
    constexpr int kAround = 8;

    std::array<std::pair<int, int>, kNumJoints> joint_ring{};  // first vertex, count
    for (auto& jr : joint_ring) jr = {-1, 0};

    for (const BoneSpec& bone : bones) {
        const Vec3 axis = normalized(bone.end - bone.start);
        // Build a stable orthonormal frame around the bone axis.
        const Vec3 ref = std::abs(axis.y) < 0.9f ? Vec3{0.0f, 1.0f, 0.0f} : Vec3{0.0f, 0.0f, 1.0f};
        const Vec3 u = normalized(cross(axis, ref));
        const Vec3 w = cross(axis, u);
        for (int ring = 0; ring < bone.rings; ++ring) {
            const float s = bone.rings == 1 ? 0.0f
                                            : static_cast<float>(ring) /
                                                  static_cast<float>(bone.rings - 1);
            const Vec3 center = lerp(bone.start, bone.end, s);
            const int first = tpl.vertex_count();
            for (int a = 0; a < kAround; ++a) {
                const float phi = 2.0f * 3.14159265358979f * static_cast<float>(a) / kAround;
                tpl.rest_vertices.push_back(center + u * (bone.radius * std::cos(phi)) +
                                            w * (bone.radius * std::sin(phi)));
                // Hair: the very top ring of the skull capsule.
                BodyRegion reg = bone.region;
                if (bone.region == BodyRegion::Head && bone.end_joint == -1 && s > 0.7f) {
                    reg = BodyRegion::Hair;
                }
                tpl.region.push_back(reg);
            }
            if (ring == 0 && bone.ring_joint >= 0) joint_ring[bone.ring_joint] = {first, kAround};
            if (ring == bone.rings - 1 && bone.end_ring_joint >= 0) {
                joint_ring[bone.end_ring_joint] = {first, kAround};
            }
            // Skin weights: interior rings follow the bone's joint; the last
            // ring blends halfway toward the next joint down the chain.
            for (int a = 0; a < kAround; ++a) {
                std::array<float, kNumJoints> row{};
                if (s > 0.85f && bone.end_joint >= 0) {
                    row[bone.weight_joint] = 0.5f;
                    row[bone.end_joint] = 0.5f;
                } else {
                    row[bone.weight_joint] = 1.0f;
                }
                tpl.skin_weights.insert(tpl.skin_weights.end(), row.begin(), row.end());
            }
        }
    }

    const int V = tpl.vertex_count();

    // Joint regressor: average of the designated ring (ring centers sit on
    // the bone axis, so the regressed joint lands on the skeleton).
    tpl.joint_regressor.assign(static_cast<std::size_t>(kNumJoints) * V, 0.0f);
    for (int k = 0; k < kNumJoints; ++k) {
        auto [first, count] = joint_ring[k];
        if (first < 0) throw ContractError("template construction missed a joint ring");
        for (int i = 0; i < count; ++i) {
            tpl.joint_regressor[static_cast<std::size_t>(k) * V + first + i] =
                1.0f / static_cast<float>(count);
        }
    }

    // Shape basis: overall size, height, width, limb thickness.
    tpl.shape_basis.assign(static_cast<std::size_t>(V) * 3 * kShapeCoeffs, 0.0f);
    const Vec3 pelvis = J[kPelvis];
    for (int v = 0; v < V; ++v) {
        const Vec3 p = tpl.rest_vertices[v];
        const Vec3 from_pelvis = p - pelvis;
        auto set = [&](int axis, int coeff, float value) {
            tpl.shape_basis[(static_cast<std::size_t>(v) * 3 + axis) * kShapeCoeffs + coeff] =
                value;
        };
        set(0, 0, from_pelvis.x * 0.08f);
        set(1, 0, from_pelvis.y * 0.08f);
        set(2, 0, from_pelvis.z * 0.08f);
        set(1, 1, p.y * 0.10f);
        set(0, 2, p.x * 0.12f);
        set(2, 2, p.z * 0.12f);
        // Thickness: radial push in the horizontal plane.
        const Vec3 horiz{p.x - pelvis.x, 0.0f, p.z - pelvis.z};
        const float hn = norm(horiz);
        if (hn > 1e-5f) {
            set(0, 3, horiz.x / hn * 0.03f);
            set(2, 3, horiz.z / hn * 0.03f);
        }
    }

    // Expression basis: head vertices only; cheek puff and jaw drop.
    tpl.expr_basis.assign(static_cast<std::size_t>(V) * 3 * kExprCoeffs, 0.0f);
    const Vec3 head_center = J[kHead] + Vec3{0.0f, 0.06f, 0.0f};
    for (int v = 0; v < V; ++v) {
        if (tpl.region[v] != BodyRegion::Head && tpl.region[v] != BodyRegion::Hair) continue;
        const Vec3 p = tpl.rest_vertices[v];
        const Vec3 radial = p - head_center;
        const float rn = norm(radial);
        auto set = [&](int axis, int coeff, float value) {
            tpl.expr_basis[(static_cast<std::size_t>(v) * 3 + axis) * kExprCoeffs + coeff] =
                value;
        };
        if (rn > 1e-5f) {
            set(0, 0, radial.x / rn * 0.015f);
            set(2, 0, radial.z / rn * 0.015f);
        }
        if (p.y < head_center.y) set(1, 1, -0.02f);
    }

    // Pose blendshapes: small seeded corrective offsets driven by a fixed
    // projection of the joint rotations.
    Rng rng(0x0b0d7u);
    const int proj_cols = (kNumJoints - 1) * 9;
    tpl.pose_feature_proj.resize(static_cast<std::size_t>(kPoseFeatures) * proj_cols);
    for (float& x : tpl.pose_feature_proj) x = rng.normal() * 0.15f;
    tpl.pose_basis.resize(static_cast<std::size_t>(V) * 3 * kPoseFeatures);
    for (float& x : tpl.pose_basis) x = rng.normal() * 0.004f;

    return tpl;
}

}  // namespace avdiff
