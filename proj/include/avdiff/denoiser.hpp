#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "avdiff/codec.hpp"
#include "avdiff/embedder.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/graph.hpp"
#include "avdiff/lora.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

inline constexpr int kTimeEmbedDim = 32;

// Sinusoidal embedding of the diffusion step, shaped [1, kTimeEmbedDim].
inline Tensor time_embedding(int t) {
    Tensor out(Shape{1, kTimeEmbedDim});
    const int half = kTimeEmbedDim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / (half - 1));
        out.data()[2 * i] = static_cast<float>(std::sin(t * freq));
        out.data()[2 * i + 1] = static_cast<float>(std::cos(t * freq));
    }
    return out;
}

struct DenoiserConfig {
    int latent_channels = kLatentChannels;  // 12
    int hidden_channels = 16;
    int blocks = 2;
    int cond_dim = 32;
    int groups = 4;
};

// Linear layer that can carry a LoRA adapter. While wrapped, weight and bias
// are frozen and only the adapter trains.
struct CondLinear {
    Tensor weight;  // [in, out]
    Tensor bias;    // [out]
    std::optional<LoRALayer> lora;

    Tensor forward(Graph& g, const Tensor& x) const {
        if (!lora) return g.linear(x, weight, bias);
        Tensor y = g.linear(x, weight, bias);
        Tensor delta = g.matmul(g.matmul(x, lora->l1), lora->l2);
        return g.add(y, g.scale(delta, lora->scale));
    }

    void wrap(int rank, float scale, std::uint64_t seed) {
        if (lora) throw ContractError("layer is already LoRA-wrapped");
        lora = lora_wrap(weight, rank, scale, seed);
        weight.set_requires_grad(false);
        bias.set_requires_grad(false);
    }
};

struct Conv3dLayer {
    Tensor weight;  // [o, c, kt, kh, kw]
    Tensor bias;    // [o]
    Pad3 pad;

    Tensor forward(Graph& g, const Tensor& x) const { return g.conv3d(x, weight, bias, pad); }
};

struct ResBlock {
    Tensor gn1_gamma, gn1_beta;
    Conv3dLayer conv1;      // 1x3x3
    CondLinear cond_proj;   // cond_dim -> hidden
    Tensor gn2_gamma, gn2_beta;
    Conv3dLayer conv2;      // 1x3x3
};

// Space-time residual denoiser predicting the noise added to a latent video.
//
// Layout: channel-expandable first conv, `blocks` residual blocks of
// group-norm/SiLU/spatial conv with an additive conditioning bias, a temporal
// mixing conv, and an output conv back to latent channels. Text and time
// reach the blocks through learned projections into a shared conditioning
// vector. The conditional variant concatenates the encoded avatar video on
// the channel axis; its first conv carries zero-initialized weights for the
// new channels, which are the only conv weights that train in stage two.
struct DenoiserNet {
    DenoiserConfig cfg;
    bool conditional = false;
    int lora_rank = 0;
    float lora_scale = 1.0f;

    Conv3dLayer first_conv;   // in = latent_channels (x2 when conditional)
    std::vector<ResBlock> blocks;
    Conv3dLayer temporal;     // 3x1x1
    Tensor gn_out_gamma, gn_out_beta;
    Conv3dLayer out_conv;     // hidden -> latent_channels
    CondLinear text_proj;     // kEmbedDim -> cond_dim
    CondLinear time_proj;     // kTimeEmbedDim -> cond_dim, never wrapped
    Tensor null_text;         // [kEmbedDim], learned stage-one null condition

    // ε̂ = forward(z_t, t, text, z_a); all latents channel-first [f,c,h',w'].
    Tensor forward(Graph& g, const Tensor& z_t, int t, const Tensor& text_emb,
                   const Tensor* z_a = nullptr) const {
        if (z_t.rank() != 4 || z_t.dim(1) != cfg.latent_channels) {
            throw DimError("denoiser expects z_t [f," + std::to_string(cfg.latent_channels) +
                           ",h,w], got " + shape_str(z_t.shape()));
        }
        Tensor x = z_t;
        if (conditional) {
            if (z_a == nullptr) throw ContractError("conditional denoiser needs z_a");
            if (!same_shape(z_a->shape(), z_t.shape())) {
                throw DimError("z_a shape " + shape_str(z_a->shape()) + " != z_t shape " +
                               shape_str(z_t.shape()));
            }
            x = g.concat_channels(z_t, *z_a);
        } else if (z_a != nullptr) {
            throw ContractError("unconditional denoiser got a z_a input");
        }
        Tensor h = first_conv.forward(g, x);

        Tensor text_row = text_emb.rank() == 1
                              ? g.reshape(text_emb, Shape{1, text_emb.dim(0)})
                              : text_emb;
        if (text_row.rank() != 2 || text_row.dim(1) != kEmbedDim) {
            throw DimError("text embedding must have " + std::to_string(kEmbedDim) + " entries");
        }
        Tensor cond = g.silu(
            g.add(time_proj.forward(g, time_embedding(t)), text_proj.forward(g, text_row)));

        for (const ResBlock& block : blocks) {
            Tensor r = g.group_norm(h, cfg.groups, block.gn1_gamma, block.gn1_beta);
            r = g.silu(r);
            r = block.conv1.forward(g, r);
            Tensor bias_vec = block.cond_proj.forward(g, cond);
            r = g.add_channel_bias(r, g.reshape(bias_vec, Shape{cfg.hidden_channels}));
            r = g.group_norm(r, cfg.groups, block.gn2_gamma, block.gn2_beta);
            r = g.silu(r);
            r = block.conv2.forward(g, r);
            h = g.add(h, r);
        }
        h = g.add(h, temporal.forward(g, h));
        h = g.group_norm(h, cfg.groups, gn_out_gamma, gn_out_beta);
        h = g.silu(h);
        return out_conv.forward(g, h);
    }

    // All parameters in a fixed, name-stable order.
    std::vector<std::pair<std::string, Tensor>> named_params() const {
        std::vector<std::pair<std::string, Tensor>> out;
        auto add_linear = [&](const std::string& name, const CondLinear& l) {
            out.emplace_back(name + ".weight", l.weight);
            out.emplace_back(name + ".bias", l.bias);
            if (l.lora) {
                out.emplace_back(name + ".lora_a", l.lora->l1);
                out.emplace_back(name + ".lora_b", l.lora->l2);
            }
        };
        out.emplace_back("first_conv.weight", first_conv.weight);
        out.emplace_back("first_conv.bias", first_conv.bias);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const std::string p = "block" + std::to_string(b);
            out.emplace_back(p + ".gn1.gamma", blocks[b].gn1_gamma);
            out.emplace_back(p + ".gn1.beta", blocks[b].gn1_beta);
            out.emplace_back(p + ".conv1.weight", blocks[b].conv1.weight);
            out.emplace_back(p + ".conv1.bias", blocks[b].conv1.bias);
            add_linear(p + ".cond_proj", blocks[b].cond_proj);
            out.emplace_back(p + ".gn2.gamma", blocks[b].gn2_gamma);
            out.emplace_back(p + ".gn2.beta", blocks[b].gn2_beta);
            out.emplace_back(p + ".conv2.weight", blocks[b].conv2.weight);
            out.emplace_back(p + ".conv2.bias", blocks[b].conv2.bias);
        }
        out.emplace_back("temporal.weight", temporal.weight);
        out.emplace_back("temporal.bias", temporal.bias);
        out.emplace_back("gn_out.gamma", gn_out_gamma);
        out.emplace_back("gn_out.beta", gn_out_beta);
        out.emplace_back("out_conv.weight", out_conv.weight);
        out.emplace_back("out_conv.bias", out_conv.bias);
        add_linear("text_proj", text_proj);
        add_linear("time_proj", time_proj);
        out.emplace_back("null_text", null_text);
        return out;
    }

    // Freeze policy. Stage one trains everything; stage two trains only the
    // LoRA factors and the first conv's new input channels (enforced by the
    // gradient mask below).
    std::vector<Tensor> trainable_params() const {
        std::vector<Tensor> out;
        if (!conditional) {
            for (auto& [name, t] : named_params()) out.push_back(t);
            return out;
        }
        out.push_back(first_conv.weight);  // masked to the new channels
        for (const ResBlock& b : blocks) {
            out.push_back(b.cond_proj.lora->l1);
            out.push_back(b.cond_proj.lora->l2);
        }
        out.push_back(text_proj.lora->l1);
        out.push_back(text_proj.lora->l2);
        return out;
    }

    // Analytic trainable-parameter count for the conditional stage:
    // sum_layers r(h+o) plus the zero-initialized first-conv channels.
    int conditional_trainable_count() const {
        if (!conditional) throw ContractError("count applies to the conditional stage");
        int count = lora_trainable_count(*text_proj.lora);
        for (const ResBlock& b : blocks) count += lora_trainable_count(*b.cond_proj.lora);
        const auto& w = first_conv.weight;
        count += w.dim(0) * (w.dim(1) / 2) * w.dim(2) * w.dim(3) * w.dim(4);
        return count;
    }

    // Zeroes gradients of the frozen original-channel half of the expanded
    // first conv; everything else frozen simply never reaches the optimizer.
    void apply_freeze_mask() const {
        if (!conditional) return;
        const auto& w = first_conv.weight;
        const int O = w.dim(0), C2 = w.dim(1);
        const int base = C2 / 2;
        const int spatial = w.dim(2) * w.dim(3) * w.dim(4);
        auto& grad = first_conv.weight.grad();
        for (int o = 0; o < O; ++o) {
            for (int c = 0; c < base; ++c) {
                float* g = grad.data() + (static_cast<std::size_t>(o) * C2 + c) * spatial;
                std::fill(g, g + spatial, 0.0f);
            }
        }
    }

    void zero_grads() const {
        for (auto& [name, t] : named_params()) t.zero_grad();
    }
};

namespace detail {
inline Tensor conv_init(Shape shape, Rng& rng) {
    int fan_in = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    return Tensor::randn(std::move(shape), rng, 1.0f / std::sqrt(static_cast<float>(fan_in)));
}

inline CondLinear linear_init(int in, int out, Rng& rng) {
    CondLinear l;
    l.weight = Tensor::randn(Shape{in, out}, rng, 1.0f / std::sqrt(static_cast<float>(in)));
    l.bias = Tensor::zeros(Shape{out});
    return l;
}
}  // namespace detail

// Fresh stage-one (unconditional, text-to-video) denoiser.
inline DenoiserNet make_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0xd0d0ULL));
    DenoiserNet net;
    net.cfg = cfg;
    const int C = cfg.hidden_channels;
    net.first_conv = {detail::conv_init(Shape{C, cfg.latent_channels, 1, 3, 3}, rng),
                      Tensor::zeros(Shape{C}), Pad3{0, 1, 1}};
    for (int b = 0; b < cfg.blocks; ++b) {
        ResBlock block;
        block.gn1_gamma = Tensor::full(Shape{C}, 1.0f);
        block.gn1_beta = Tensor::zeros(Shape{C});
        block.conv1 = {detail::conv_init(Shape{C, C, 1, 3, 3}, rng), Tensor::zeros(Shape{C}),
                       Pad3{0, 1, 1}};
        block.cond_proj = detail::linear_init(cfg.cond_dim, C, rng);
        block.gn2_gamma = Tensor::full(Shape{C}, 1.0f);
        block.gn2_beta = Tensor::zeros(Shape{C});
        block.conv2 = {detail::conv_init(Shape{C, C, 1, 3, 3}, rng), Tensor::zeros(Shape{C}),
                       Pad3{0, 1, 1}};
        net.blocks.push_back(std::move(block));
    }
    net.temporal = {detail::conv_init(Shape{C, C, 3, 1, 1}, rng), Tensor::zeros(Shape{C}),
                    Pad3{1, 0, 0}};
    net.gn_out_gamma = Tensor::full(Shape{C}, 1.0f);
    net.gn_out_beta = Tensor::zeros(Shape{C});
    net.out_conv = {detail::conv_init(Shape{cfg.latent_channels, C, 1, 3, 3}, rng),
                    Tensor::zeros(Shape{cfg.latent_channels}), Pad3{0, 1, 1}};
    net.text_proj = detail::linear_init(kEmbedDim, cfg.cond_dim, rng);
    net.time_proj = detail::linear_init(kTimeEmbedDim, cfg.cond_dim, rng);
    net.null_text = Tensor::randn(Shape{kEmbedDim}, rng, 0.125f);
    for (auto& [name, t] : net.named_params()) t.set_requires_grad();
    return net;
}

// Doubles the first conv's input channels: original weights copied into the
// first half, new channels zero. Reapplying is a contract error.
inline void expand_first_layer(DenoiserNet& net) {
    if (net.conditional) throw ContractError("first layer is already expanded");
    const auto& w = net.first_conv.weight;
    const int O = w.dim(0), C = w.dim(1), KT = w.dim(2), KH = w.dim(3), KW = w.dim(4);
    Tensor expanded(Shape{O, 2 * C, KT, KH, KW});
    const int spatial = KT * KH * KW;
    for (int o = 0; o < O; ++o) {
        std::copy_n(w.data() + static_cast<std::size_t>(o) * C * spatial,
                    static_cast<std::size_t>(C) * spatial,
                    expanded.data() + static_cast<std::size_t>(o) * 2 * C * spatial);
    }
    net.first_conv.weight = expanded;
    net.first_conv.weight.set_requires_grad();
    net.conditional = true;
}

// Stage-two surgery on a frozen stage-one net: deep-copy parameters, expand
// the first conv, and LoRA-wrap the text projection and every block's
// conditioning projection.
inline DenoiserNet to_conditional(const DenoiserNet& base, int rank, float scale,
                                  std::uint64_t seed) {
    if (base.conditional) throw ContractError("base net is already conditional");
    DenoiserNet net = base;
    // Deep-copy every tensor so the frozen base stays untouched.
    auto clone_linear = [](CondLinear& l) {
        l.weight = l.weight.clone();
        l.bias = l.bias.clone();
    };
    net.first_conv.weight = net.first_conv.weight.clone();
    net.first_conv.bias = net.first_conv.bias.clone();
    for (ResBlock& b : net.blocks) {
        b.gn1_gamma = b.gn1_gamma.clone();
        b.gn1_beta = b.gn1_beta.clone();
        b.conv1.weight = b.conv1.weight.clone();
        b.conv1.bias = b.conv1.bias.clone();
        clone_linear(b.cond_proj);
        b.gn2_gamma = b.gn2_gamma.clone();
        b.gn2_beta = b.gn2_beta.clone();
        b.conv2.weight = b.conv2.weight.clone();
        b.conv2.bias = b.conv2.bias.clone();
    }
    net.temporal.weight = net.temporal.weight.clone();
    net.temporal.bias = net.temporal.bias.clone();
    net.gn_out_gamma = net.gn_out_gamma.clone();
    net.gn_out_beta = net.gn_out_beta.clone();
    net.out_conv.weight = net.out_conv.weight.clone();
    net.out_conv.bias = net.out_conv.bias.clone();
    clone_linear(net.text_proj);
    clone_linear(net.time_proj);
    net.null_text = net.null_text.clone();

    for (auto& [name, t] : net.named_params()) t.set_requires_grad(false);
    expand_first_layer(net);
    net.lora_rank = rank;
    net.lora_scale = scale;
    int layer_index = 0;
    for (ResBlock& b : net.blocks) {
        b.cond_proj.wrap(rank, scale, derive_seed(seed, 0x11aa + layer_index++));
    }
    net.text_proj.wrap(rank, scale, derive_seed(seed, 0x11aa + layer_index++));
    return net;
}

}  // namespace avdiff
