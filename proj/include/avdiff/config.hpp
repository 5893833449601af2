#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "avdiff/denoiser.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/motion.hpp"

namespace avdiff {

// Run-wide knobs parsed from key=value config files and/or CLI flags.
// Defaults are the desk-scale recipe: 16 frames at 32x32, T=100, 20 DDIM
// steps, LoRA rank 4, guidance 3.
struct RunConfig {
    int resolution = 32;
    int frames = 16;
    int T = 100;
    int ddim_steps = 20;
    float guidance = 3.0f;
    int lora_rank = 4;
    float lora_scale = 1.0f;
    float lr = 1e-3f;
    int batch_size = 2;
    int steps = 2000;
    float null_drop = 0.1f;
    int n_splats = 700;
    float focal_scale = 1.1f;
    int hidden_channels = 16;
    int blocks = 2;
    int cond_dim = 32;
    int groups = 4;
    std::uint64_t seed = 0;

    DenoiserConfig net_config() const {
        DenoiserConfig cfg;
        cfg.hidden_channels = hidden_channels;
        cfg.blocks = blocks;
        cfg.cond_dim = cond_dim;
        cfg.groups = groups;
        return cfg;
    }

    void validate() const {
        if (resolution < 8 || resolution % 2 != 0) {
            throw ConfigError("resolution must be even and >= 8");
        }
        if (frames < 2) throw ConfigError("frames must be >= 2");
        if (T < 2) throw ConfigError("T must be >= 2");
        if (ddim_steps < 1 || ddim_steps > T || T % ddim_steps != 0) {
            throw ConfigError("ddim_steps must divide T and lie in [1, T]");
        }
        if (lora_rank < 1) throw ConfigError("lora_rank must be >= 1");
        if (!(lr > 0.0f)) throw ConfigError("lr must be positive");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (steps < 0) throw ConfigError("steps must be >= 0");
        if (null_drop < 0.0f || null_drop > 1.0f) {
            throw ConfigError("null_drop must be in [0, 1]");
        }
        if (n_splats < 1) throw ConfigError("n_splats must be >= 1");
        if (hidden_channels < groups || hidden_channels % groups != 0) {
            throw ConfigError("hidden_channels must be a positive multiple of groups");
        }
        if (blocks < 1) throw ConfigError("blocks must be >= 1");
    }
};

inline void apply_run_config_map(RunConfig& cfg, const std::map<std::string, std::string>& kv) {
    auto geti = [&](const char* key, int& out) {
        if (kv.count(key)) out = std::stoi(kv.at(key));
    };
    auto getf = [&](const char* key, float& out) {
        if (kv.count(key)) out = std::stof(kv.at(key));
    };
    try {
        geti("resolution", cfg.resolution);
        geti("frames", cfg.frames);
        geti("T", cfg.T);
        geti("ddim_steps", cfg.ddim_steps);
        getf("guidance", cfg.guidance);
        geti("lora_rank", cfg.lora_rank);
        getf("lora_scale", cfg.lora_scale);
        getf("lr", cfg.lr);
        geti("batch_size", cfg.batch_size);
        geti("steps", cfg.steps);
        getf("null_drop", cfg.null_drop);
        geti("n_splats", cfg.n_splats);
        getf("focal_scale", cfg.focal_scale);
        geti("hidden_channels", cfg.hidden_channels);
        geti("blocks", cfg.blocks);
        geti("cond_dim", cfg.cond_dim);
        geti("groups", cfg.groups);
        if (kv.count("seed")) cfg.seed = std::stoull(kv.at("seed"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad run-config value: ") + e.what());
    }
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    RunConfig cfg;
    apply_run_config_map(cfg, read_meta_file(path));
    cfg.validate();
    return cfg;
}

}  // namespace avdiff
