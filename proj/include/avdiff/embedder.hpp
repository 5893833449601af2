#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor.hpp"
#include "avdiff/vocab.hpp"

namespace avdiff {

inline constexpr int kEmbedDim = 64;
inline constexpr int kFrameEmbedGrid = 8;  // frames pooled to 8x8x3 before projection
inline constexpr std::uint64_t kEmbedSeed = 0x5eedf00dULL;

// Frozen bag-of-tokens text/image embedder. Token vectors are seeded random
// unit vectors; frames embed through a fixed seeded projection of pooled
// pixels. Nothing here is ever trained.
class EmbedVocab {
public:
    explicit EmbedVocab(std::uint64_t seed = kEmbedSeed)
        : tokens_(caption_vocabulary()),
          vectors_(Shape{static_cast<int>(caption_vocabulary().size()), kEmbedDim}),
          frame_proj_(Shape{kEmbedDim, kFrameEmbedGrid * kFrameEmbedGrid * 3}) {
        Rng rng(derive_seed(seed, 0x70cab));
        for (int t = 0; t < vectors_.dim(0); ++t) {
            float* row = vectors_.data() + static_cast<std::size_t>(t) * kEmbedDim;
            double sq = 0.0;
            for (int d = 0; d < kEmbedDim; ++d) {
                row[d] = rng.normal();
                sq += static_cast<double>(row[d]) * row[d];
            }
            const float inv = static_cast<float>(1.0 / std::sqrt(sq));
            for (int d = 0; d < kEmbedDim; ++d) row[d] *= inv;
        }
        Rng rng2(derive_seed(seed, 0xf3a6e));
        for (float& v : frame_proj_.values()) v = rng2.normal();
    }

    int size() const { return static_cast<int>(tokens_.size()); }

    int token_id(const std::string& token) const {
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            if (tokens_[i] == token) return static_cast<int>(i);
        }
        return -1;
    }

    const Tensor& token_vectors() const { return vectors_; }
    const Tensor& frame_projection() const { return frame_proj_; }

    // Normalized sum of known token vectors. Unknown tokens are skipped with
    // a warning; an empty caption after filtering is degenerate.
    Tensor text_embedding(const std::string& text) const {
        Tensor out(Shape{kEmbedDim});
        int used = 0;
        for (const std::string& tok : tokenize(text)) {
            const int id = token_id(tok);
            if (id < 0) {
                std::cerr << "warning: caption token outside vocabulary: " << tok << "\n";
                continue;
            }
            const float* row = vectors_.data() + static_cast<std::size_t>(id) * kEmbedDim;
            for (int d = 0; d < kEmbedDim; ++d) out.data()[d] += row[d];
            ++used;
        }
        if (used == 0) throw DegeneracyError("caption has no known tokens: " + text);
        normalize(out);
        return out;
    }

    // Box-pool the frame to kFrameEmbedGrid^2 cells, project, normalize.
    Tensor frame_embedding(const Tensor& frame) const {
        if (frame.rank() != 3 || frame.dim(2) != 3) {
            throw DimError("frame_embedding expects [h,w,3]");
        }
        const int H = frame.dim(0), W = frame.dim(1), G = kFrameEmbedGrid;
        std::vector<float> pooled(static_cast<std::size_t>(G) * G * 3, 0.0f);
        std::vector<int> counts(static_cast<std::size_t>(G) * G, 0);
        for (int i = 0; i < H; ++i) {
            const int gi = std::min(G - 1, i * G / H);
            for (int j = 0; j < W; ++j) {
                const int gj = std::min(G - 1, j * G / W);
                const float* p = frame.data() + (static_cast<std::size_t>(i) * W + j) * 3;
                float* cell = pooled.data() + (static_cast<std::size_t>(gi) * G + gj) * 3;
                cell[0] += p[0];
                cell[1] += p[1];
                cell[2] += p[2];
                ++counts[static_cast<std::size_t>(gi) * G + gj];
            }
        }
        for (int c = 0; c < G * G; ++c) {
            const float inv = counts[c] > 0 ? 1.0f / static_cast<float>(counts[c]) : 0.0f;
            for (int k = 0; k < 3; ++k) pooled[static_cast<std::size_t>(c) * 3 + k] *= inv;
        }
        Tensor out(Shape{kEmbedDim});
        const int n = G * G * 3;
        for (int d = 0; d < kEmbedDim; ++d) {
            double acc = 0.0;
            const float* row = frame_proj_.data() + static_cast<std::size_t>(d) * n;
            for (int i = 0; i < n; ++i) acc += static_cast<double>(row[i]) * pooled[i];
            out.data()[d] = static_cast<float>(acc);
        }
        normalize(out);
        return out;
    }

private:
    static void normalize(Tensor& v) {
        double sq = 0.0;
        for (float x : v.values()) sq += static_cast<double>(x) * x;
        if (sq < 1e-20) throw DegeneracyError("cannot normalize a zero embedding");
        const float inv = static_cast<float>(1.0 / std::sqrt(sq));
        for (float& x : v.values()) x *= inv;
    }

    std::vector<std::string> tokens_;
    Tensor vectors_;
    Tensor frame_proj_;
};

}  // namespace avdiff
