#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>

#include "avdiff/denoiser.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/motion.hpp"
#include "avdiff/schedule.hpp"
#include "avdiff/tensor_io.hpp"

namespace avdiff {

// A checkpoint is a directory: weights.bin (named-tensor archive) plus
// training_state.txt. Stage-two checkpoints store only the LoRA factors and
// the first conv's new channels, plus the hash and path of the stage-one
// checkpoint they attach to.
struct TrainingState {
    std::string stage = "base";  // "base" or "conditional"
    int step = 0;
    int T = 100;
    float beta_start = 0.0f;  // 0 means "default schedule for T"
    float beta_end = 0.0f;
    DenoiserConfig net_cfg;
    int lora_rank = 4;
    float lora_scale = 1.0f;
    std::string base_ckpt;  // conditional only
    std::string base_hash;  // conditional only, hex fnv1a64 of base weights.bin
};

inline NoiseSchedule schedule_from_state(const TrainingState& st) {
    if (st.beta_start > 0.0f) return make_schedule(st.T, st.beta_start, st.beta_end);
    return default_schedule(st.T);
}

namespace detail {
inline std::string fmt_float(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}
}  // namespace detail

inline void write_training_state(const TrainingState& st, const std::filesystem::path& path) {
    std::string text;
    text += "stage=" + st.stage + "\n";
    text += "step=" + std::to_string(st.step) + "\n";
    text += "T=" + std::to_string(st.T) + "\n";
    text += "beta_start=" + detail::fmt_float(st.beta_start) + "\n";
    text += "beta_end=" + detail::fmt_float(st.beta_end) + "\n";
    text += "latent_channels=" + std::to_string(st.net_cfg.latent_channels) + "\n";
    text += "hidden_channels=" + std::to_string(st.net_cfg.hidden_channels) + "\n";
    text += "blocks=" + std::to_string(st.net_cfg.blocks) + "\n";
    text += "cond_dim=" + std::to_string(st.net_cfg.cond_dim) + "\n";
    text += "groups=" + std::to_string(st.net_cfg.groups) + "\n";
    text += "lora_rank=" + std::to_string(st.lora_rank) + "\n";
    text += "lora_scale=" + detail::fmt_float(st.lora_scale) + "\n";
    if (!st.base_ckpt.empty()) {
        text += "base_ckpt=" + st.base_ckpt + "\n";
        text += "base_hash=" + st.base_hash + "\n";
    }
    write_file_bytes(path, text);
}

inline TrainingState read_training_state(const std::filesystem::path& path) {
    const auto kv = read_meta_file(path);
    TrainingState st;
    st.stage = kv.at("stage");
    st.step = std::stoi(kv.at("step"));
    st.T = std::stoi(kv.at("T"));
    st.beta_start = std::stof(kv.at("beta_start"));
    st.beta_end = std::stof(kv.at("beta_end"));
    st.net_cfg.latent_channels = std::stoi(kv.at("latent_channels"));
    st.net_cfg.hidden_channels = std::stoi(kv.at("hidden_channels"));
    st.net_cfg.blocks = std::stoi(kv.at("blocks"));
    st.net_cfg.cond_dim = std::stoi(kv.at("cond_dim"));
    st.net_cfg.groups = std::stoi(kv.at("groups"));
    st.lora_rank = std::stoi(kv.at("lora_rank"));
    st.lora_scale = std::stof(kv.at("lora_scale"));
    if (kv.count("base_ckpt")) {
        st.base_ckpt = kv.at("base_ckpt");
        st.base_hash = kv.at("base_hash");
    }
    return st;
}

namespace detail {
// New-channel half [o, c, kt, kh, kw] of an expanded first conv.
inline Tensor first_conv_new_channels(const DenoiserNet& net) {
    const auto& w = net.first_conv.weight;
    const int O = w.dim(0), C2 = w.dim(1), base = C2 / 2;
    const int spatial = w.dim(2) * w.dim(3) * w.dim(4);
    Tensor out(Shape{O, base, w.dim(2), w.dim(3), w.dim(4)});
    for (int o = 0; o < O; ++o) {
        std::copy_n(w.data() + (static_cast<std::size_t>(o) * C2 + base) * spatial,
                    static_cast<std::size_t>(base) * spatial,
                    out.data() + static_cast<std::size_t>(o) * base * spatial);
    }
    return out;
}

inline void set_first_conv_new_channels(DenoiserNet& net, const Tensor& chunk) {
    auto& w = net.first_conv.weight;
    const int O = w.dim(0), C2 = w.dim(1), base = C2 / 2;
    const int spatial = w.dim(2) * w.dim(3) * w.dim(4);
    if (chunk.shape() != Shape{O, base, w.dim(2), w.dim(3), w.dim(4)}) {
        throw IoError("first conv new-channel tensor has the wrong shape");
    }
    for (int o = 0; o < O; ++o) {
        std::copy_n(chunk.data() + static_cast<std::size_t>(o) * base * spatial,
                    static_cast<std::size_t>(base) * spatial,
                    w.data() + (static_cast<std::size_t>(o) * C2 + base) * spatial);
    }
}

inline void overwrite_tensor(Tensor& dst, const Tensor& src, const std::string& name) {
    if (dst.shape() != src.shape()) {
        throw IoError("checkpoint tensor shape mismatch for " + name);
    }
    std::copy(src.values().begin(), src.values().end(), dst.values().begin());
}
}  // namespace detail

inline void save_checkpoint(const DenoiserNet& net, const TrainingState& st,
                            const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory: " + dir.string());
    TensorArchive archive;
    if (!net.conditional) {
        for (const auto& [name, tensor] : net.named_params()) {
            archive.emplace_back(name, tensor);
        }
    } else {
        for (std::size_t b = 0; b < net.blocks.size(); ++b) {
            const std::string p = "block" + std::to_string(b) + ".cond_proj";
            archive.emplace_back(p + ".lora_a", net.blocks[b].cond_proj.lora->l1);
            archive.emplace_back(p + ".lora_b", net.blocks[b].cond_proj.lora->l2);
        }
        archive.emplace_back("text_proj.lora_a", net.text_proj.lora->l1);
        archive.emplace_back("text_proj.lora_b", net.text_proj.lora->l2);
        archive.emplace_back("first_conv.new_channels", detail::first_conv_new_channels(net));
    }
    save_archive(archive, dir / "weights.bin");
    write_training_state(st, dir / "training_state.txt");
}

inline std::string checkpoint_weights_hash(const std::filesystem::path& dir) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(read_file_bytes(dir / "weights.bin"))));
    return buf;
}

struct LoadedCheckpoint {
    DenoiserNet net;
    TrainingState state;
};

// Loads a base checkpoint; conditional checkpoints re-attach to their base
// (path from the state unless overridden) after verifying its hash.
inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir,
                                        const std::filesystem::path& base_override = {}) {
    TrainingState st = read_training_state(dir / "training_state.txt");
    TensorArchive archive = load_archive(dir / "weights.bin");
    if (st.stage == "base") {
        DenoiserNet net = make_denoiser(st.net_cfg, 0);
        auto params = net.named_params();
        if (params.size() != archive.size()) {
            throw IoError("base checkpoint has unexpected record count");
        }
        for (auto& [name, tensor] : params) {
            detail::overwrite_tensor(tensor, archive_get(archive, name), name);
        }
        return {std::move(net), std::move(st)};
    }
    if (st.stage != "conditional") throw IoError("unknown checkpoint stage: " + st.stage);

    std::filesystem::path base_dir = base_override.empty()
                                         ? std::filesystem::path(st.base_ckpt)
                                         : base_override;
    if (base_override.empty() && base_dir.is_relative() &&
        !std::filesystem::exists(base_dir / "training_state.txt")) {
        // Fall back to resolving relative to the conditional checkpoint.
        base_dir = dir / st.base_ckpt;
    }
    const std::string got_hash = checkpoint_weights_hash(base_dir);
    if (got_hash != st.base_hash) {
        throw ConfigError("base checkpoint hash mismatch: expected " + st.base_hash + ", got " +
                          got_hash + " at " + base_dir.string());
    }
    LoadedCheckpoint base = load_checkpoint(base_dir);
    DenoiserNet net = to_conditional(base.net, st.lora_rank, st.lora_scale, 0);
    for (std::size_t b = 0; b < net.blocks.size(); ++b) {
        const std::string p = "block" + std::to_string(b) + ".cond_proj";
        detail::overwrite_tensor(net.blocks[b].cond_proj.lora->l1,
                                 archive_get(archive, p + ".lora_a"), p + ".lora_a");
        detail::overwrite_tensor(net.blocks[b].cond_proj.lora->l2,
                                 archive_get(archive, p + ".lora_b"), p + ".lora_b");
    }
    detail::overwrite_tensor(net.text_proj.lora->l1, archive_get(archive, "text_proj.lora_a"),
                             "text_proj.lora_a");
    detail::overwrite_tensor(net.text_proj.lora->l2, archive_get(archive, "text_proj.lora_b"),
                             "text_proj.lora_b");
    detail::set_first_conv_new_channels(net,
                                        archive_get(archive, "first_conv.new_channels"));
    return {std::move(net), std::move(st)};
}

}  // namespace avdiff
