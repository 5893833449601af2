#pragma once

#include <cstddef>

#include "avdiff/errors.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// Fixed invertible latent codec: non-overlapping 2x2 spatial patches, mixed
// per color channel by an orthonormal Haar basis. Videos are [f,h,w,3]
// channel-last; latents are [f, h/2, w/2, 12] channel-last with latent
// channel = basis*3 + color (channels 0..2 are the DC coefficients of r,g,b).
//
// Orthonormality makes the roundtrip exact up to float arithmetic and
// preserves the L2 norm.

inline constexpr int kLatentChannels = 12;

namespace detail {
// Rows are the basis vectors over a patch read as (p00, p01, p10, p11).
inline constexpr float kHaar[4][4] = {
    {0.5f, 0.5f, 0.5f, 0.5f},
    {0.5f, 0.5f, -0.5f, -0.5f},
    {0.5f, -0.5f, 0.5f, -0.5f},
    {0.5f, -0.5f, -0.5f, 0.5f},
};
}  // namespace detail

inline Tensor patch_encode(const Tensor& video) {
    if (video.rank() != 4 || video.dim(3) != 3) {
        throw DimError("patch_encode expects video [f,h,w,3], got " + shape_str(video.shape()));
    }
    const int F = video.dim(0), H = video.dim(1), W = video.dim(2);
    if (H % 2 != 0 || W % 2 != 0) {
        throw DimError("patch_encode needs even spatial extents, got " + shape_str(video.shape()));
    }
    const int HL = H / 2, WL = W / 2;
    Tensor z(Shape{F, HL, WL, kLatentChannels});
    const float* pv = video.data();
    float* pz = z.data();
    for (int t = 0; t < F; ++t) {
        for (int i = 0; i < HL; ++i) {
            for (int j = 0; j < WL; ++j) {
                for (int col = 0; col < 3; ++col) {
                    const auto at = [&](int di, int dj) {
                        return pv[((static_cast<std::size_t>(t) * H + (2 * i + di)) * W +
                                   (2 * j + dj)) *
                                      3 +
                                  col];
                    };
                    const float patch[4] = {at(0, 0), at(0, 1), at(1, 0), at(1, 1)};
                    for (int b = 0; b < 4; ++b) {
                        float acc = 0.0f;
                        for (int p = 0; p < 4; ++p) acc += detail::kHaar[b][p] * patch[p];
                        pz[((static_cast<std::size_t>(t) * HL + i) * WL + j) * kLatentChannels +
                           b * 3 + col] = acc;
                    }
                }
            }
        }
    }
    check_finite(z, "patch_encode");
    return z;
}

inline Tensor patch_decode(const Tensor& z) {
    if (z.rank() != 4 || z.dim(3) != kLatentChannels) {
        throw DimError("patch_decode expects latent [f,h',w',12], got " + shape_str(z.shape()));
    }
    const int F = z.dim(0), HL = z.dim(1), WL = z.dim(2);
    const int H = HL * 2, W = WL * 2;
    Tensor video(Shape{F, H, W, 3});
    const float* pz = z.data();
    float* pv = video.data();
    for (int t = 0; t < F; ++t) {
        for (int i = 0; i < HL; ++i) {
            for (int j = 0; j < WL; ++j) {
                for (int col = 0; col < 3; ++col) {
                    float coef[4];
                    for (int b = 0; b < 4; ++b) {
                        coef[b] = pz[((static_cast<std::size_t>(t) * HL + i) * WL + j) *
                                         kLatentChannels +
                                     b * 3 + col];
                    }
                    for (int p = 0; p < 4; ++p) {
                        float acc = 0.0f;
                        for (int b = 0; b < 4; ++b) acc += detail::kHaar[b][p] * coef[b];
                        const int di = p / 2, dj = p % 2;
                        pv[((static_cast<std::size_t>(t) * H + (2 * i + di)) * W +
                            (2 * j + dj)) *
                               3 +
                           col] = acc;
                    }
                }
            }
        }
    }
    check_finite(video, "patch_decode");
    return video;
}

// Layout converters between the channel-last external convention and the
// channel-first convention the denoiser's conv stack uses. Plain data moves,
// never taped.
inline Tensor to_channel_first(const Tensor& x) {
    if (x.rank() != 4) throw DimError("to_channel_first expects rank 4");
    const int F = x.dim(0), H = x.dim(1), W = x.dim(2), C = x.dim(3);
    Tensor y(Shape{F, C, H, W});
    const float* px = x.data();
    float* py = y.data();
    for (int t = 0; t < F; ++t) {
        for (int i = 0; i < H; ++i) {
            for (int j = 0; j < W; ++j) {
                for (int c = 0; c < C; ++c) {
                    py[((static_cast<std::size_t>(t) * C + c) * H + i) * W + j] =
                        px[((static_cast<std::size_t>(t) * H + i) * W + j) * C + c];
                }
            }
        }
    }
    return y;
}

inline Tensor to_channel_last(const Tensor& x) {
    if (x.rank() != 4) throw DimError("to_channel_last expects rank 4");
    const int F = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor y(Shape{F, H, W, C});
    const float* px = x.data();
    float* py = y.data();
    for (int t = 0; t < F; ++t) {
        for (int c = 0; c < C; ++c) {
            for (int i = 0; i < H; ++i) {
                for (int j = 0; j < W; ++j) {
                    py[((static_cast<std::size_t>(t) * H + i) * W + j) * C + c] =
                        px[((static_cast<std::size_t>(t) * C + c) * H + i) * W + j];
                }
            }
        }
    }
    return y;
}

}  // namespace avdiff
