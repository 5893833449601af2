#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "avdiff/codec.hpp"
#include "avdiff/denoiser.hpp"
#include "avdiff/errors.hpp"
#include "avdiff/graph.hpp"
#include "avdiff/schedule.hpp"

namespace avdiff {

// Classifier-free guidance: eps_uncond + w * (eps_cond - eps_uncond).
// w == 1 returns the conditional prediction itself so guided and unguided
// trajectories match exactly; w == 0 returns the unconditional one.
inline Tensor cfg_combine(const Tensor& eps_uncond, const Tensor& eps_cond, float w) {
    if (!same_shape(eps_uncond.shape(), eps_cond.shape())) {
        throw DimError("cfg_combine shape mismatch");
    }
    if (w == 1.0f) return eps_cond;
    if (w == 0.0f) return eps_uncond;
    Tensor out(eps_cond.shape());
    const float* pu = eps_uncond.data();
    const float* pc = eps_cond.data();
    float* po = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) po[i] = pu[i] + w * (pc[i] - pu[i]);
    check_finite(out, "cfg_combine");
    return out;
}

using EpsPredictor = std::function<Tensor(const Tensor& z_t, int t)>;

// Deterministic DDIM update over an evenly spaced step subset that includes
// T and ends at 0:
//   z0_hat = (z_t - sqrt(1-a_t) eps) / sqrt(a_t)
//   z_prev = sqrt(a_prev) z0_hat + sqrt(1-a_prev) eps
inline Tensor ddim_trajectory(Tensor z, const NoiseSchedule& sched, int n_steps,
                              const EpsPredictor& predict) {
    if (n_steps < 1 || n_steps > sched.T) {
        throw ConfigError("ddim steps must lie in [1, T]");
    }
    if (sched.T % n_steps != 0) {
        throw ConfigError("ddim steps must evenly divide T for an even subset");
    }
    const int stride = sched.T / n_steps;
    for (int t = sched.T; t > 0; t -= stride) {
        const int t_prev = t - stride;
        const Tensor eps = predict(z, t);
        if (!same_shape(eps.shape(), z.shape())) {
            throw DimError("eps prediction shape mismatch in ddim");
        }
        const float ab_t = sched.alpha_bar_at(t);
        const float ab_prev = sched.alpha_bar_at(t_prev);
        const float inv_sqrt_ab = 1.0f / std::sqrt(ab_t);
        const float sigma_t = std::sqrt(1.0f - ab_t);
        const float c0 = std::sqrt(ab_prev);
        const float c1 = std::sqrt(1.0f - ab_prev);
        Tensor next(z.shape());
        for (std::size_t i = 0; i < z.size(); ++i) {
            const float z0_hat = (z.data()[i] - sigma_t * eps.data()[i]) * inv_sqrt_ab;
            next.data()[i] = c0 * z0_hat + c1 * eps.data()[i];
        }
        check_finite(next, "ddim_step");
        z = std::move(next);
    }
    return z;
}

inline EpsPredictor net_eps_predictor(const DenoiserNet& net, const Tensor& text_emb,
                                      const Tensor* z_a, float guidance) {
    return [&net, text_emb, z_a, guidance](const Tensor& z_t, int t) {
        Graph g;
        Tensor cond = net.forward(g, z_t, t, text_emb, z_a);
        if (guidance == 1.0f) return cond;
        Graph g2;
        Tensor uncond = net.forward(g2, z_t, t, net.null_text, z_a);
        return cfg_combine(uncond, cond, guidance);
    };
}

struct SampleRequest {
    int frames = 16;
    int height = 32;  // pixel resolution; latent is half
    int width = 32;
    float guidance = 3.0f;
    int ddim_steps = 20;
    std::uint64_t seed = 0;
};

// Full sampler: seeded Gaussian z_T -> DDIM -> patch decode. The guidance
// extrapolates between the text-conditional and null-text branches; the
// avatar condition (when the net is conditional) feeds both. Returns the
// decoded video [f,h,w,3], unclamped.
inline Tensor ddim_sample(const DenoiserNet& net, const NoiseSchedule& sched,
                          const SampleRequest& req, const Tensor& text_emb,
                          const Tensor* z_a_channel_first) {
    if (net.conditional && z_a_channel_first == nullptr) {
        throw ContractError("conditional sampling needs the avatar latent");
    }
    if (req.height % 2 != 0 || req.width % 2 != 0) {
        throw ConfigError("sample resolution must be even");
    }
    const Shape latent_shape{req.frames, net.cfg.latent_channels, req.height / 2, req.width / 2};
    if (z_a_channel_first && !same_shape(z_a_channel_first->shape(), latent_shape)) {
        throw DimError("avatar latent shape " + shape_str(z_a_channel_first->shape()) +
                       " does not match the requested sample shape");
    }
    Rng rng(derive_seed(req.seed, 0xdd13ULL));
    Tensor z(latent_shape);
    rng.fill_normal(z.values());
    Tensor z0 = ddim_trajectory(std::move(z), sched, req.ddim_steps,
                                net_eps_predictor(net, text_emb, z_a_channel_first,
                                                  req.guidance));
    return patch_decode(to_channel_last(z0));
}

}  // namespace avdiff
