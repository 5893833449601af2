#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "avdiff/errors.hpp"
#include "avdiff/graph.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// Low-rank adapter on a frozen weight: Y = XW + s * X L1 L2.
// L1 is seeded Gaussian scaled by 1/sqrt(h); L2 starts at zero, so a freshly
// wrapped layer computes exactly XW.
struct LoRALayer {
    Tensor weight;  // frozen base W [h, o]
    Tensor l1;      // [h, r], trainable
    Tensor l2;      // [r, o], trainable, zero at construction
    float scale = 1.0f;
    int rank = 0;
};

inline LoRALayer lora_wrap(const Tensor& weight, int rank, float scale, std::uint64_t seed) {
    if (weight.rank() != 2) throw DimError("lora_wrap expects a rank-2 weight");
    const int h = weight.dim(0), o = weight.dim(1);
    if (rank < 1 || rank > std::min(h, o)) {
        throw ConfigError("lora rank " + std::to_string(rank) + " outside [1, min(" +
                          std::to_string(h) + ", " + std::to_string(o) + ")]");
    }
    LoRALayer layer;
    layer.weight = weight;
    layer.rank = rank;
    layer.scale = scale;
    Rng rng(derive_seed(seed, 0x10afULL));
    layer.l1 = Tensor::randn(Shape{h, rank}, rng, 1.0f / std::sqrt(static_cast<float>(h)));
    layer.l2 = Tensor::zeros(Shape{rank, o});
    layer.l1.set_requires_grad();
    layer.l2.set_requires_grad();
    return layer;
}

// Y = XW + s X L1 L2 on the tape. The base product is computed first and the
// low-rank delta added after it, so with L2 = 0 the result is bit-identical
// to the unwrapped layer. Gradients reach L1 and L2 only (W never requires
// grad while wrapped).
inline Tensor lora_forward(Graph& g, const LoRALayer& layer, const Tensor& x) {
    Tensor y = g.matmul(x, layer.weight);
    Tensor delta = g.matmul(g.matmul(x, layer.l1), layer.l2);
    return g.add(y, g.scale(delta, layer.scale));
}

// Dense equivalent W + s L1 L2.
inline Tensor merge_lora(const LoRALayer& layer) {
    const int h = layer.weight.dim(0), o = layer.weight.dim(1), r = layer.rank;
    Tensor merged = layer.weight.clone();
    for (int i = 0; i < h; ++i) {
        for (int j = 0; j < o; ++j) {
            double acc = 0.0;
            for (int k = 0; k < r; ++k) {
                acc += static_cast<double>(layer.l1.data()[i * r + k]) *
                       layer.l2.data()[k * o + j];
            }
            merged.data()[i * o + j] += static_cast<float>(layer.scale * acc);
        }
    }
    check_finite(merged, "merge_lora");
    return merged;
}

inline int lora_trainable_count(const LoRALayer& layer) {
    return layer.rank * (layer.weight.dim(0) + layer.weight.dim(1));
}

}  // namespace avdiff
