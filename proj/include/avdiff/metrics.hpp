#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "avdiff/body.hpp"
#include "avdiff/camera.hpp"
#include "avdiff/embedder.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/motion.hpp"
#include "avdiff/render.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// A tracked point's pixel path over F frames; displacement k is
// points[k+1] - points[k]. Metric math runs in double.
struct Tracklet {
    std::vector<std::array<double, 2>> points;

    int displacement_count() const { return static_cast<int>(points.size()) - 1; }

    std::array<double, 2> displacement(int k) const {
        return {points[k + 1][0] - points[k][0], points[k + 1][1] - points[k][1]};
    }

    double total_motion() const {
        double acc = 0.0;
        for (int k = 0; k < displacement_count(); ++k) {
            const auto d = displacement(k);
            acc += std::sqrt(d[0] * d[0] + d[1] * d[1]);
        }
        return acc;
    }
};

// 100 * cosine similarity between two embedding vectors.
inline double text_image_similarity(const Tensor& t, const Tensor& i) {
    if (t.size() != i.size()) throw DimError("embedding sizes differ");
    double dot = 0.0, nt = 0.0, ni = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        dot += static_cast<double>(t.data()[k]) * i.data()[k];
        nt += static_cast<double>(t.data()[k]) * t.data()[k];
        ni += static_cast<double>(i.data()[k]) * i.data()[k];
    }
    if (nt < 1e-20 || ni < 1e-20) throw DegeneracyError("zero vector in similarity");
    return 100.0 * dot / (std::sqrt(nt) * std::sqrt(ni));
}

// Mean over frames of the caption-vs-frame similarity.
inline double clip_style_video_score(const Tensor& video, const std::string& caption,
                                     const EmbedVocab& vocab) {
    if (video.rank() != 4 || video.dim(3) != 3) {
        throw DimError("clip_style_video_score expects video [f,h,w,3]");
    }
    const Tensor text = vocab.text_embedding(caption);
    double total = 0.0;
    for (int f = 0; f < video.dim(0); ++f) {
        total += text_image_similarity(text, vocab.frame_embedding(video_frame(video, f)));
    }
    return total / video.dim(0);
}

// Block-matching point tracker: seeds on a stride grid over frame 0, then
// advances each point frame to frame by minimizing the sum of absolute RGB
// differences of a (2*window+1)^2 patch over a +-window search range. Zero
// displacement is tested first and kept unless strictly beaten, so uniform
// regions stay put; remaining ties resolve in row-major scan order. When the
// best match is a strict interior minimum with nonzero residual, a parabolic
// fit of the SAD surface refines it to sub-pixel precision (integer anchors
// keep advancing the search; the fractional part only enters the reported
// positions). An exact match is never refined, so pure pixel shifts and
// static videos report exact integer displacements.
inline std::vector<Tracklet> extract_tracklets(const Tensor& video, int grid_stride,
                                               int window) {
    if (video.rank() != 4 || video.dim(3) != 3) {
        throw DimError("extract_tracklets expects video [f,h,w,3]");
    }
    const int F = video.dim(0), H = video.dim(1), W = video.dim(2);
    if (F < 2) throw ContractError("tracking needs at least 2 frames");
    if (grid_stride < 1 || window < 1) throw ContractError("bad tracker parameters");

    auto pixel = [&](int f, int i, int j, int c) -> float {
        i = std::clamp(i, 0, H - 1);
        j = std::clamp(j, 0, W - 1);
        return video.data()[(((static_cast<std::size_t>(f) * H) + i) * W + j) * 3 + c];
    };
    auto patch_sad = [&](int f0, int i0, int j0, int f1, int i1, int j1) {
        double sad = 0.0;
        for (int di = -window; di <= window; ++di) {
            for (int dj = -window; dj <= window; ++dj) {
                for (int c = 0; c < 3; ++c) {
                    sad += std::abs(static_cast<double>(pixel(f0, i0 + di, j0 + dj, c)) -
                                    pixel(f1, i1 + di, j1 + dj, c));
                }
            }
        }
        return sad;
    };
    // Sub-pixel offset of the parabola through (s_minus, s_center, s_plus).
    auto parabolic = [](double s_minus, double s_center, double s_plus) {
        const double denom = s_minus - 2.0 * s_center + s_plus;
        if (denom <= 1e-12) return 0.0;
        return std::clamp(0.5 * (s_minus - s_plus) / denom, -0.5, 0.5);
    };

    std::vector<Tracklet> tracks;
    for (int i = grid_stride / 2; i < H; i += grid_stride) {
        for (int j = grid_stride / 2; j < W; j += grid_stride) {
            Tracklet tr;
            int ci = i, cj = j;
            tr.points.push_back({static_cast<double>(cj), static_cast<double>(ci)});
            for (int f = 1; f < F; ++f) {
                int best_di = 0, best_dj = 0;
                double best = patch_sad(f - 1, ci, cj, f, ci, cj);
                for (int di = -window; di <= window; ++di) {
                    for (int dj = -window; dj <= window; ++dj) {
                        if (di == 0 && dj == 0) continue;
                        const double sad = patch_sad(f - 1, ci, cj, f, ci + di, cj + dj);
                        if (sad < best) {
                            best = sad;
                            best_di = di;
                            best_dj = dj;
                        }
                    }
                }
                double frac_i = 0.0, frac_j = 0.0;
                if (best > 0.0 && std::abs(best_di) < window && std::abs(best_dj) < window) {
                    const int ni = ci + best_di, nj = cj + best_dj;
                    frac_i = parabolic(patch_sad(f - 1, ci, cj, f, ni - 1, nj), best,
                                       patch_sad(f - 1, ci, cj, f, ni + 1, nj));
                    frac_j = parabolic(patch_sad(f - 1, ci, cj, f, ni, nj - 1), best,
                                       patch_sad(f - 1, ci, cj, f, ni, nj + 1));
                }
                ci = std::clamp(ci + best_di, 0, H - 1);
                cj = std::clamp(cj + best_dj, 0, W - 1);
                tr.points.push_back({static_cast<double>(cj) + frac_j,
                                     static_cast<double>(ci) + frac_i});
            }
            tracks.push_back(std::move(tr));
        }
    }
    return tracks;
}

// Mean over frames of the cosine between per-frame displacements. A frame
// where either displacement is the zero vector contributes 0. F is the
// displacement count.
inline double tracklet_corr(const Tracklet& a, const Tracklet& b) {
    if (a.displacement_count() != b.displacement_count()) {
        throw ContractError("tracklet lengths differ");
    }
    const int F = a.displacement_count();
    if (F < 1) throw ContractError("tracklets need at least one displacement");
    double acc = 0.0;
    for (int k = 0; k < F; ++k) {
        const auto da = a.displacement(k);
        const auto db = b.displacement(k);
        const double na = std::sqrt(da[0] * da[0] + da[1] * da[1]);
        const double nb = std::sqrt(db[0] * db[0] + db[1] * db[1]);
        if (na == 0.0 || nb == 0.0) continue;  // contributes 0
        acc += (da[0] * db[0] + da[1] * db[1]) / (na * nb);
    }
    return acc / F;
}

// Two-sided nearest-neighbor correlation over tracklet sets:
//   raw = (1/m) sum_{b in B} max_{a in A} corr(a, b)
//       + (1/n) sum_{a in A} max_{b in B} corr(a, b)
// reported as 50 * raw so identical sets score 100. Ties in the max resolve
// to the lowest tracklet index.
inline double motion_fidelity(const std::vector<Tracklet>& a, const std::vector<Tracklet>& b) {
    if (a.empty() || b.empty()) throw ContractError("motion_fidelity needs non-empty sets");
    double sum_b = 0.0;
    for (const Tracklet& tb : b) {
        double best = -2.0;
        for (const Tracklet& ta : a) {
            const double c = tracklet_corr(ta, tb);
            if (c > best) best = c;
        }
        sum_b += best;
    }
    double sum_a = 0.0;
    for (const Tracklet& ta : a) {
        double best = -2.0;
        for (const Tracklet& tb : b) {
            const double c = tracklet_corr(ta, tb);
            if (c > best) best = c;
        }
        sum_a += best;
    }
    const double raw = sum_b / b.size() + sum_a / a.size();
    return 50.0 * raw;
}

// Drops tracklets whose total displacement length is below the threshold.
// Static scene points carry no motion signal and contribute zero correlation
// by the zero-displacement rule, so comparisons against moving references
// filter them first.
inline std::vector<Tracklet> filter_moving(const std::vector<Tracklet>& tracks,
                                           double min_total_motion) {
    std::vector<Tracklet> out;
    for (const Tracklet& t : tracks) {
        if (t.total_motion() >= min_total_motion) out.push_back(t);
    }
    return out;
}

// Keeps tracklets that move in every single frame (and at least min_total in
// aggregate). Under the zero-displacement rule a tracklet that pauses cannot
// reach corr = 1 even against itself, so score protocols built on the
// motion_fidelity(T, T) = 100 identity use this stricter filter.
inline std::vector<Tracklet> filter_strictly_moving(const std::vector<Tracklet>& tracks,
                                                    double min_total_motion) {
    std::vector<Tracklet> out;
    for (const Tracklet& t : tracks) {
        if (t.total_motion() < min_total_motion) continue;
        bool every_frame = true;
        for (int k = 0; k < t.displacement_count() && every_frame; ++k) {
            const auto d = t.displacement(k);
            if (d[0] == 0.0 && d[1] == 0.0) every_frame = false;
        }
        if (every_frame) out.push_back(t);
    }
    return out;
}

// Forward-backward reliability check: re-track each tracklet from its final
// position back to frame 0 with the same block matcher and keep it only when
// the return lands within max_drift pixels of the seed. Points swept by
// occlusion boundaries fail the round trip.
inline std::vector<Tracklet> filter_consistent(const Tensor& video,
                                               const std::vector<Tracklet>& tracks, int window,
                                               double max_drift) {
    const int F = video.dim(0), H = video.dim(1), W = video.dim(2);
    auto pixel = [&](int f, int i, int j, int c) -> float {
        i = std::clamp(i, 0, H - 1);
        j = std::clamp(j, 0, W - 1);
        return video.data()[(((static_cast<std::size_t>(f) * H) + i) * W + j) * 3 + c];
    };
    auto patch_sad = [&](int f0, int i0, int j0, int f1, int i1, int j1) {
        double sad = 0.0;
        for (int di = -window; di <= window; ++di) {
            for (int dj = -window; dj <= window; ++dj) {
                for (int c = 0; c < 3; ++c) {
                    sad += std::abs(static_cast<double>(pixel(f0, i0 + di, j0 + dj, c)) -
                                    pixel(f1, i1 + di, j1 + dj, c));
                }
            }
        }
        return sad;
    };
    std::vector<Tracklet> out;
    for (const Tracklet& t : tracks) {
        int ci = static_cast<int>(std::lround(t.points.back()[1]));
        int cj = static_cast<int>(std::lround(t.points.back()[0]));
        ci = std::clamp(ci, 0, H - 1);
        cj = std::clamp(cj, 0, W - 1);
        for (int f = F - 1; f > 0; --f) {
            int best_di = 0, best_dj = 0;
            double best = patch_sad(f, ci, cj, f - 1, ci, cj);
            for (int di = -window; di <= window; ++di) {
                for (int dj = -window; dj <= window; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const double sad = patch_sad(f, ci, cj, f - 1, ci + di, cj + dj);
                    if (sad < best) {
                        best = sad;
                        best_di = di;
                        best_dj = dj;
                    }
                }
            }
            ci = std::clamp(ci + best_di, 0, H - 1);
            cj = std::clamp(cj + best_dj, 0, W - 1);
        }
        const double drift = std::hypot(static_cast<double>(cj) - t.points.front()[0],
                                        static_cast<double>(ci) - t.points.front()[1]);
        if (drift <= max_drift) out.push_back(t);
    }
    return out;
}

// Analytic reference tracklets: joint positions projected through the
// per-frame cameras. Joints that leave the frame or fall behind the camera
// end their tracklet at the last valid position (displacements become zero).
inline std::vector<Tracklet> joint_projection_tracklets(const BodyTemplate& tpl,
                                                        const PoseSequence& motion,
                                                        const std::vector<Camera>& cams) {
    if (static_cast<int>(cams.size()) != motion.frame_count()) {
        throw ContractError("camera count does not match motion frames");
    }
    const int actors = motion.actor_count();
    std::vector<Tracklet> tracks(static_cast<std::size_t>(actors) * kNumJoints);
    std::vector<bool> seen(tracks.size(), false);
    for (int f = 0; f < motion.frame_count(); ++f) {
        for (int a = 0; a < actors; ++a) {
            const ActorFrame& af = motion.frames[f][a];
            const auto world = forward_kinematics(tpl, af.params, af.root_translation);
            for (int k = 0; k < kNumJoints; ++k) {
                Tracklet& tr = tracks[static_cast<std::size_t>(a) * kNumJoints + k];
                std::array<double, 2> pos =
                    tr.points.empty() ? std::array<double, 2>{0.0, 0.0} : tr.points.back();
                try {
                    const Projection p = project(cams[f], world[k].trans);
                    pos = {p.u, p.v};
                    seen[static_cast<std::size_t>(a) * kNumJoints + k] = true;
                } catch (const BehindCameraError&) {
                }
                tr.points.push_back(pos);
            }
        }
    }
    std::vector<Tracklet> out;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        if (seen[i]) out.push_back(std::move(tracks[i]));
    }
    if (out.empty()) throw ContractError("no joints visible in any frame");
    return out;
}

}  // namespace avdiff
