#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/geom.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// Procedural background plus a scene-characteristic color tint. The tint is
// an affine color map clamped back into [0,1]^3.
struct SceneSpec {
    std::string id;
    std::string caption_fragment;       // e.g. "in a park"
    std::array<float, 9> tint_matrix{}; // row-major 3x3
    std::array<float, 3> tint_bias{};
    std::uint64_t seed = 0;
};

inline const std::vector<std::string>& known_scenes() {
    static const std::vector<std::string> ids = {"park", "beach", "street", "ballroom"};
    return ids;
}

inline SceneSpec scene_from_id(const std::string& id, std::uint64_t seed) {
    SceneSpec s;
    s.id = id;
    s.seed = seed;
    if (id == "park") {
        s.caption_fragment = "in a park";
        s.tint_matrix = {0.96f, 0.03f, 0.0f, 0.02f, 1.0f, 0.02f, 0.0f, 0.03f, 0.92f};
        s.tint_bias = {0.0f, 0.015f, 0.0f};
    } else if (id == "beach") {
        s.caption_fragment = "on a beach";
        s.tint_matrix = {1.0f, 0.05f, 0.0f, 0.02f, 0.95f, 0.0f, 0.0f, 0.0f, 0.85f};
        s.tint_bias = {0.04f, 0.015f, 0.0f};
    } else if (id == "street") {
        s.caption_fragment = "on a street";
        s.tint_matrix = {0.82f, 0.09f, 0.09f, 0.09f, 0.82f, 0.09f, 0.09f, 0.09f, 0.82f};
        s.tint_bias = {0.01f, 0.01f, 0.01f};
    } else if (id == "ballroom") {
        s.caption_fragment = "in a ballroom";
        s.tint_matrix = {0.95f, 0.02f, 0.0f, 0.02f, 0.84f, 0.0f, 0.0f, 0.02f, 0.72f};
        s.tint_bias = {0.05f, 0.02f, 0.0f};
    } else {
        throw ConfigError("unknown scene id: " + id);
    }
    return s;
}

inline Vec3 apply_tint(const SceneSpec& s, const Vec3& c) {
    const auto& m = s.tint_matrix;
    Vec3 out{m[0] * c.x + m[1] * c.y + m[2] * c.z + s.tint_bias[0],
             m[3] * c.x + m[4] * c.y + m[5] * c.z + s.tint_bias[1],
             m[6] * c.x + m[7] * c.y + m[8] * c.z + s.tint_bias[2]};
    return {std::clamp(out.x, 0.0f, 1.0f), std::clamp(out.y, 0.0f, 1.0f),
            std::clamp(out.z, 0.0f, 1.0f)};
}

// Applies the tint in place to an [h,w,3] image or [f,h,w,3] video.
inline void apply_tint(const SceneSpec& s, Tensor& image) {
    float* p = image.data();
    for (std::size_t i = 0; i + 2 < image.size(); i += 3) {
        const Vec3 t = apply_tint(s, {p[i], p[i + 1], p[i + 2]});
        p[i] = t.x;
        p[i + 1] = t.y;
        p[i + 2] = t.z;
    }
}

namespace detail {

// Cheap deterministic per-pixel hash noise in [0,1).
inline float pixel_noise(std::uint64_t seed, int i, int j, int channel) {
    std::uint64_t s = seed ^ (static_cast<std::uint64_t>(i) << 40) ^
                      (static_cast<std::uint64_t>(j) << 16) ^
                      static_cast<std::uint64_t>(channel);
    return static_cast<float>(splitmix64(s) >> 11) * static_cast<float>(0x1.0p-53);
}

inline void fill_rect(Tensor& img, int i0, int i1, int j0, int j1, Vec3 color) {
    const int H = img.dim(0), W = img.dim(1);
    for (int i = std::max(0, i0); i < std::min(H, i1); ++i) {
        for (int j = std::max(0, j0); j < std::min(W, j1); ++j) {
            float* p = img.data() + (static_cast<std::size_t>(i) * W + j) * 3;
            p[0] = color.x;
            p[1] = color.y;
            p[2] = color.z;
        }
    }
}

inline void fill_disc(Tensor& img, float ci, float cj, float radius, Vec3 color) {
    const int H = img.dim(0), W = img.dim(1);
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            const float di = i - ci, dj = j - cj;
            if (di * di + dj * dj <= radius * radius) {
                float* p = img.data() + (static_cast<std::size_t>(i) * W + j) * 3;
                p[0] = color.x;
                p[1] = color.y;
                p[2] = color.z;
            }
        }
    }
}

}  // namespace detail

// Deterministic procedural background: sky gradient, textured ground, and
// scene-specific flat props.
inline Tensor render_background(const SceneSpec& spec, int width, int height) {
    if (width < 4 || height < 4) throw ConfigError("background resolution too small");
    Tensor img(Shape{height, width, 3});
    const int horizon = static_cast<int>(height * 0.55f);
    const std::uint64_t seed = derive_seed(spec.seed, 0xbac6ULL);

    auto sky_ground = [&](Vec3 sky_top, Vec3 sky_bottom, Vec3 ground, float ground_noise) {
        for (int i = 0; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                float* p = img.data() + (static_cast<std::size_t>(i) * width + j) * 3;
                if (i < horizon) {
                    const float t = static_cast<float>(i) / std::max(1, horizon - 1);
                    const Vec3 c = lerp(sky_top, sky_bottom, t);
                    p[0] = c.x;
                    p[1] = c.y;
                    p[2] = c.z;
                } else {
                    const float n =
                        (detail::pixel_noise(seed, i, j, 0) - 0.5f) * 2.0f * ground_noise;
                    p[0] = std::clamp(ground.x + n, 0.0f, 1.0f);
                    p[1] = std::clamp(ground.y + n, 0.0f, 1.0f);
                    p[2] = std::clamp(ground.z + n, 0.0f, 1.0f);
                }
            }
        }
    };

    Rng rng(seed);
    if (spec.id == "park") {
        sky_ground({0.45f, 0.65f, 0.95f}, {0.70f, 0.82f, 0.95f}, {0.25f, 0.52f, 0.22f}, 0.06f);
        for (int tree = 0; tree < 3; ++tree) {
            const float cj = width * rng.uniform(0.1f, 0.9f);
            const float ci = horizon * rng.uniform(0.55f, 0.9f);
            const float r = width * rng.uniform(0.06f, 0.11f);
            detail::fill_rect(img, static_cast<int>(ci), horizon + height / 10,
                              static_cast<int>(cj - r * 0.15f), static_cast<int>(cj + r * 0.15f),
                              {0.35f, 0.23f, 0.12f});
            detail::fill_disc(img, ci, cj, r, {0.12f, 0.38f, 0.14f});
        }
    } else if (spec.id == "beach") {
        sky_ground({0.50f, 0.72f, 0.95f}, {0.85f, 0.90f, 0.97f}, {0.88f, 0.78f, 0.55f}, 0.05f);
        // Sea band just below the horizon.
        detail::fill_rect(img, horizon, horizon + std::max(2, height / 8), 0, width,
                          {0.18f, 0.42f, 0.62f});
        detail::fill_disc(img, height * 0.12f, width * rng.uniform(0.6f, 0.85f), width * 0.06f,
                          {0.99f, 0.95f, 0.75f});
    } else if (spec.id == "street") {
        sky_ground({0.60f, 0.64f, 0.70f}, {0.75f, 0.77f, 0.80f}, {0.30f, 0.30f, 0.32f}, 0.04f);
        for (int b = 0; b < 4; ++b) {
            const int bw = static_cast<int>(width * rng.uniform(0.12f, 0.22f));
            const int bj = static_cast<int>(width * (0.05f + 0.24f * b) +
                                            width * rng.uniform(0.0f, 0.04f));
            const int bh = static_cast<int>(horizon * rng.uniform(0.4f, 0.9f));
            const float g = rng.uniform(0.35f, 0.55f);
            detail::fill_rect(img, horizon - bh, horizon, bj, bj + bw, {g, g, g * 1.05f});
        }
        // Lane marking.
        for (int j = 0; j < width; j += std::max(2, width / 10)) {
            detail::fill_rect(img, (horizon + height) / 2, (horizon + height) / 2 + 1, j,
                              j + std::max(1, width / 20), {0.85f, 0.85f, 0.70f});
        }
    } else if (spec.id == "ballroom") {
        sky_ground({0.30f, 0.22f, 0.16f}, {0.45f, 0.34f, 0.24f}, {0.40f, 0.30f, 0.20f}, 0.03f);
        // Checkered floor.
        const int tile = std::max(2, width / 8);
        for (int i = horizon; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                if (((i / tile) + (j / tile)) % 2 == 0) {
                    float* p = img.data() + (static_cast<std::size_t>(i) * width + j) * 3;
                    p[0] = 0.30f;
                    p[1] = 0.22f;
                    p[2] = 0.15f;
                }
            }
        }
        for (int c = 0; c < 3; ++c) {
            const int cj = static_cast<int>(width * (0.2f + 0.3f * c));
            detail::fill_rect(img, 0, horizon, cj, cj + std::max(1, width / 24),
                              {0.55f, 0.45f, 0.32f});
        }
    } else {
        throw ConfigError("unknown scene id: " + spec.id);
    }
    check_finite(img, "render_background");
    return img;
}

inline std::pair<SceneSpec, Tensor> synth_scene(const std::string& scene_id, int width,
                                                int height, std::uint64_t seed) {
    SceneSpec spec = scene_from_id(scene_id, seed);
    return {spec, render_background(spec, width, height)};
}

}  // namespace avdiff
