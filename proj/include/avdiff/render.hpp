#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <span>
#include <vector>

#include "avdiff/camera.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/geom.hpp"
#include "avdiff/splats.hpp"
#include "avdiff/tensor.hpp"
#include "avdiff/tensor_io.hpp"

namespace avdiff {

// A splat placed in world space, ready to draw.
struct WorldSplat {
    Vec3 center;
    float radius;  // world-space standard deviation
    Vec3 color;
    float opacity;
};

inline std::vector<WorldSplat> make_world_splats(const AvatarSplats& splats,
                                                 std::span<const Vec3> world_centers) {
    if (world_centers.size() != splats.centers.size()) {
        throw DimError("world center count does not match splat count");
    }
    std::vector<WorldSplat> out(world_centers.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = {world_centers[i], splats.radii[i], splats.colors[i], splats.opacities[i]};
    }
    return out;
}

struct RenderResult {
    Tensor rgb;    // [h, w, 3], values in [0, 1], black background
    Tensor alpha;  // [h, w], accumulated coverage in [0, 1]
};

// Software splatting: project centers, sort near-to-far (ties by splat
// index), draw each splat as a 2D Gaussian footprint truncated at 3 sigma,
// and alpha-composite front-to-back over black. A pixel whose accumulated
// alpha passes 0.999 stops accepting contributions. Splats behind the near
// plane are culled, not errors.
inline RenderResult render_frame(std::span<const WorldSplat> splats, const Camera& cam) {
    const int H = cam.height, W = cam.width;
    RenderResult result{Tensor(Shape{H, W, 3}), Tensor(Shape{H, W})};
    std::vector<float> transmittance(static_cast<std::size_t>(H) * W, 1.0f);

    struct Visible {
        float u, v, sigma;
        std::uint32_t index;
        float depth;
    };
    std::vector<Visible> visible;
    visible.reserve(splats.size());
    for (std::size_t i = 0; i < splats.size(); ++i) {
        Projection proj;
        try {
            proj = project(cam, splats[i].center);
        } catch (const BehindCameraError&) {
            continue;
        }
        const float sigma = cam.focal * splats[i].radius / proj.depth;
        visible.push_back({proj.u, proj.v, sigma, static_cast<std::uint32_t>(i), proj.depth});
    }
    std::sort(visible.begin(), visible.end(), [](const Visible& a, const Visible& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.index < b.index;
    });

    float* rgb = result.rgb.data();
    float* alpha = result.alpha.data();
    for (const Visible& s : visible) {
        const WorldSplat& sp = splats[s.index];
        const float reach = 3.0f * s.sigma;
        const int i0 = std::max(0, static_cast<int>(std::floor(s.v - reach - 0.5f)));
        const int i1 = std::min(H - 1, static_cast<int>(std::ceil(s.v + reach - 0.5f)));
        const int j0 = std::max(0, static_cast<int>(std::floor(s.u - reach - 0.5f)));
        const int j1 = std::min(W - 1, static_cast<int>(std::ceil(s.u + reach - 0.5f)));
        const float inv_two_sigma_sq = 1.0f / (2.0f * s.sigma * s.sigma);
        const float reach_sq = reach * reach;
        for (int i = i0; i <= i1; ++i) {
            const float dy = (static_cast<float>(i) + 0.5f) - s.v;
            for (int j = j0; j <= j1; ++j) {
                const float dx = (static_cast<float>(j) + 0.5f) - s.u;
                const float d_sq = dx * dx + dy * dy;
                if (d_sq > reach_sq) continue;
                const std::size_t px = static_cast<std::size_t>(i) * W + j;
                float& t = transmittance[px];
                if (t < 0.001f) continue;  // accumulated alpha beyond 0.999
                const float a = sp.opacity * std::exp(-d_sq * inv_two_sigma_sq);
                if (a <= 0.0f) continue;
                rgb[px * 3 + 0] += t * a * sp.color.x;
                rgb[px * 3 + 1] += t * a * sp.color.y;
                rgb[px * 3 + 2] += t * a * sp.color.z;
                alpha[px] += t * a;
                t *= (1.0f - a);
            }
        }
    }
    for (std::size_t px = 0; px < static_cast<std::size_t>(H) * W; ++px) {
        alpha[px] = std::clamp(alpha[px], 0.0f, 1.0f);
        for (int c = 0; c < 3; ++c) {
            rgb[px * 3 + c] = std::clamp(rgb[px * 3 + c], 0.0f, 1.0f);
        }
    }
    return result;
}

// Binary PPM (P6) with simple round-to-nearest quantization.
inline void write_ppm(const Tensor& image, const std::filesystem::path& path) {
    if (image.rank() != 3 || image.dim(2) != 3) throw DimError("write_ppm expects [h,w,3]");
    const int H = image.dim(0), W = image.dim(1);
    std::string bytes = "P6\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
    bytes.reserve(bytes.size() + static_cast<std::size_t>(H) * W * 3);
    for (std::size_t i = 0; i < image.size(); ++i) {
        const float v = std::clamp(image.data()[i], 0.0f, 1.0f);
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
    }
    write_file_bytes(path, bytes);
}

// Stacks per-frame [h,w,3] images into a video tensor [f,h,w,3].
inline Tensor stack_video(const std::vector<Tensor>& frames) {
    if (frames.empty()) throw ContractError("stack_video: no frames");
    const int H = frames[0].dim(0), W = frames[0].dim(1);
    Tensor video(Shape{static_cast<int>(frames.size()), H, W, 3});
    const std::size_t per = static_cast<std::size_t>(H) * W * 3;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        if (frames[f].shape() != frames[0].shape()) {
            throw DimError("stack_video: inconsistent frame shapes");
        }
        std::copy_n(frames[f].data(), per, video.data() + f * per);
    }
    return video;
}

inline Tensor video_frame(const Tensor& video, int f) {
    if (video.rank() != 4) throw DimError("video_frame expects [f,h,w,c]");
    const int H = video.dim(1), W = video.dim(2), C = video.dim(3);
    Tensor frame(Shape{H, W, C});
    const std::size_t per = static_cast<std::size_t>(H) * W * C;
    std::copy_n(video.data() + static_cast<std::size_t>(f) * per, per, frame.data());
    return frame;
}

}  // namespace avdiff
