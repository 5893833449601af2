#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "avdiff/body.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/geom.hpp"
#include "avdiff/rng.hpp"

namespace avdiff {

// Region -> color mapping standing in for text-driven appearance. The ids are
// a frozen vocabulary shared with captions and the metric embedder; every
// color keeps some energy in at least one channel so avatars never vanish
// against the black render background.
struct AppearanceSpec {
    std::string id;
    std::string caption_fragment;  // e.g. "a man in a white shirt"
    Vec3 skin{0.85f, 0.65f, 0.50f};
    Vec3 hair{0.16f, 0.11f, 0.08f};
    Vec3 torso{0.5f, 0.5f, 0.5f};
    Vec3 arms{0.85f, 0.65f, 0.50f};
    Vec3 legs{0.3f, 0.3f, 0.35f};
    Vec3 feet{0.2f, 0.15f, 0.1f};

    Vec3 region_color(BodyRegion r) const {
        switch (r) {
            case BodyRegion::Head: return skin;
            case BodyRegion::Hair: return hair;
            case BodyRegion::Torso: return torso;
            case BodyRegion::LeftArm:
            case BodyRegion::RightArm: return arms;
            case BodyRegion::LeftHand:
            case BodyRegion::RightHand: return skin;
            case BodyRegion::LeftLeg:
            case BodyRegion::RightLeg: return legs;
            case BodyRegion::LeftFoot:
            case BodyRegion::RightFoot: return feet;
        }
        return torso;
    }
};

inline const std::vector<AppearanceSpec>& known_appearances() {
    static const std::vector<AppearanceSpec> specs = [] {
        std::vector<AppearanceSpec> v;
        AppearanceSpec a;

        a.id = "man_white_shirt";
        a.caption_fragment = "a man in a white shirt";
        a.torso = {0.92f, 0.92f, 0.92f};
        a.legs = {0.30f, 0.32f, 0.45f};
        v.push_back(a);

        a = AppearanceSpec{};
        a.id = "woman_yellow_dress";
        a.caption_fragment = "a woman in a yellow dress";
        a.skin = {0.88f, 0.68f, 0.55f};
        a.hair = {0.30f, 0.18f, 0.08f};
        a.torso = {0.95f, 0.85f, 0.15f};
        a.legs = {0.95f, 0.85f, 0.15f};  // the dress reads down the legs
        a.feet = {0.35f, 0.12f, 0.12f};
        v.push_back(a);

        a = AppearanceSpec{};
        a.id = "man_blue_suit";
        a.caption_fragment = "a man in a blue suit";
        a.torso = {0.20f, 0.28f, 0.66f};
        a.arms = {0.20f, 0.28f, 0.66f};
        a.legs = {0.22f, 0.28f, 0.62f};
        v.push_back(a);

        a = AppearanceSpec{};
        a.id = "woman_red_dress";
        a.caption_fragment = "a woman in a red dress";
        a.skin = {0.88f, 0.68f, 0.55f};
        a.hair = {0.10f, 0.08f, 0.07f};
        a.torso = {0.85f, 0.14f, 0.20f};
        a.legs = {0.85f, 0.14f, 0.20f};
        v.push_back(a);

        a = AppearanceSpec{};
        a.id = "man_green_shirt";
        a.caption_fragment = "a man in a green shirt";
        a.torso = {0.20f, 0.70f, 0.30f};
        a.legs = {0.38f, 0.34f, 0.30f};
        v.push_back(a);
        return v;
    }();
    return specs;
}

inline const AppearanceSpec& appearance_from_id(const std::string& id) {
    for (const auto& a : known_appearances()) {
        if (a.id == id) return a;
    }
    throw ConfigError("unknown appearance id: " + id);
}

// Skinnable isotropic Gaussian set bound to a body template.
struct AvatarSplats {
    std::vector<Vec3> centers;       // rest space, N
    std::vector<float> radii;        // N, world-unit standard deviations
    std::vector<Vec3> colors;        // N, rgb in [0,1]
    std::vector<float> opacities;    // N, in (0,1]
    std::vector<float> skin_weights; // N*kNumJoints

    int count() const { return static_cast<int>(centers.size()); }
};

namespace detail {
inline float region_splat_radius(BodyRegion r) {
    switch (r) {
        case BodyRegion::Head:
        case BodyRegion::Hair: return 0.034f;
        case BodyRegion::Torso: return 0.048f;
        case BodyRegion::LeftArm:
        case BodyRegion::RightArm: return 0.023f;
        case BodyRegion::LeftHand:
        case BodyRegion::RightHand: return 0.020f;
        case BodyRegion::LeftLeg:
        case BodyRegion::RightLeg: return 0.032f;
        case BodyRegion::LeftFoot:
        case BodyRegion::RightFoot: return 0.022f;
    }
    return 0.03f;
}
}  // namespace detail

// Samples splats on the template surface; each copies the skin weights of its
// nearest template vertex (the one it was seeded from) and takes its color
// from the appearance's region table.
inline AvatarSplats bind_splats(const BodyTemplate& tpl, const AppearanceSpec& appearance,
                                int n_splats, std::uint64_t seed) {
    if (tpl.vertex_count() == 0) throw ContractError("bind_splats: empty template");
    if (n_splats < 1) throw ContractError("bind_splats: n_splats must be >= 1");
    Rng rng(derive_seed(seed, 0x73706c61ULL));
    AvatarSplats s;
    s.centers.reserve(n_splats);
    const int V = tpl.vertex_count();
    for (int i = 0; i < n_splats; ++i) {
        const int seed_vertex = rng.uniform_int(0, V - 1);
        const Vec3 jitter{rng.normal() * 0.004f, rng.normal() * 0.004f, rng.normal() * 0.004f};
        const Vec3 center = tpl.rest_vertices[seed_vertex] + jitter;
        s.centers.push_back(center);
        // Weights and region come from the nearest vertex; the jitter can
        // cross capsule boundaries near joints, so search explicitly.
        int v = seed_vertex;
        float best = norm(tpl.rest_vertices[seed_vertex] - center);
        for (int cand = 0; cand < V; ++cand) {
            const float d = norm(tpl.rest_vertices[cand] - center);
            if (d < best) {
                best = d;
                v = cand;
            }
        }
        const BodyRegion region = tpl.region[v];
        s.radii.push_back(detail::region_splat_radius(region) * rng.uniform(0.85f, 1.15f));
        Vec3 color = appearance.region_color(region);
        const float shade = rng.uniform(0.92f, 1.05f);
        color = {std::clamp(color.x * shade, 0.02f, 1.0f),
                 std::clamp(color.y * shade, 0.02f, 1.0f),
                 std::clamp(color.z * shade, 0.02f, 1.0f)};
        s.colors.push_back(color);
        s.opacities.push_back(rng.uniform(0.78f, 0.95f));
        const float* row = tpl.skin_weights.data() + static_cast<std::size_t>(v) * kNumJoints;
        s.skin_weights.insert(s.skin_weights.end(), row, row + kNumJoints);
    }
    return s;
}

// Poses splat centers with the same LBS transform field as the body surface.
inline std::vector<Vec3> skin_splats(const AvatarSplats& splats, const BodyTemplate& tpl,
                                     const BodyParams& params, const Vec3& root_translation = {}) {
    const auto transforms = skinning_transforms(tpl, params, root_translation);
    return apply_lbs(splats.centers, splats.skin_weights, transforms);
}

}  // namespace avdiff
