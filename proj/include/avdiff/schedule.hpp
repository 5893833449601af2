#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

// Forward-process tables: beta_t in (0,1), alpha_t = 1 - beta_t,
// alpha_bar_t = prod_{s<=t} alpha_s. Index 1..T; alpha_bar(0) = 1 by
// convention so samplers can step to a noise-free endpoint.
struct NoiseSchedule {
    int T = 0;
    std::vector<float> beta;       // [T]
    std::vector<float> alpha;      // [T]
    std::vector<float> alpha_bar;  // [T]

    float beta_at(int t) const {
        check_step(t);
        return beta[t - 1];
    }
    float alpha_at(int t) const {
        check_step(t);
        return alpha[t - 1];
    }
    // Accepts t = 0 and returns exactly 1.
    float alpha_bar_at(int t) const {
        if (t == 0) return 1.0f;
        check_step(t);
        return alpha_bar[t - 1];
    }

    void check_step(int t) const {
        if (t < 1 || t > T) {
            throw ContractError("diffusion step " + std::to_string(t) + " outside [1, " +
                                std::to_string(T) + "]");
        }
    }
};

// Linear beta ramp from beta_start to beta_end over T steps.
inline NoiseSchedule make_schedule(int T, float beta_start, float beta_end) {
    if (T < 1) throw ConfigError("schedule needs T >= 1");
    if (!(beta_start > 0.0f) || !(beta_start <= beta_end) || !(beta_end < 1.0f)) {
        // beta_start == 0 is permitted only through make_degenerate_schedule in tests.
        throw ConfigError("schedule requires 0 < beta_start <= beta_end < 1");
    }
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double running = 1.0;
    for (int i = 0; i < T; ++i) {
        const float frac = T == 1 ? 0.0f : static_cast<float>(i) / static_cast<float>(T - 1);
        s.beta[i] = beta_start + frac * (beta_end - beta_start);
        s.alpha[i] = 1.0f - s.beta[i];
        running *= s.alpha[i];
        s.alpha_bar[i] = static_cast<float>(running);
    }
    if (!(s.alpha_bar[T - 1] > 0.0f)) throw ConfigError("schedule collapses: alpha_bar_T <= 0");
    return s;
}

// Default desk-scale schedule: the usual 1e-4..0.02 ramp rescaled from 1000
// steps so total variance matches. At the default T=100 this is exactly
// (1e-3, 0.2); the caps keep very small step counts valid.
inline NoiseSchedule default_schedule(int T) {
    const float scale = 1000.0f / static_cast<float>(T);
    return make_schedule(T, std::min(1e-4f * scale, 0.05f), std::min(0.02f * scale, 0.35f));
}

// Test-only: an all-zero beta table (alpha_bar identically 1).
inline NoiseSchedule make_degenerate_schedule(int T) {
    NoiseSchedule s;
    s.T = T;
    s.beta.assign(T, 0.0f);
    s.alpha.assign(T, 1.0f);
    s.alpha_bar.assign(T, 1.0f);
    return s;
}

// z_t = sqrt(alpha_bar_t) z + sqrt(1 - alpha_bar_t) eps. Pure data op, not
// taped; gradients never flow through the forward process here.
inline Tensor q_sample(const Tensor& z, int t, const Tensor& eps, const NoiseSchedule& s) {
    if (!same_shape(z.shape(), eps.shape())) {
        throw DimError("q_sample: noise shape " + shape_str(eps.shape()) + " != latent shape " +
                       shape_str(z.shape()));
    }
    s.check_step(t);
    const float ab = s.alpha_bar_at(t);
    const float c0 = std::sqrt(ab);
    const float c1 = std::sqrt(1.0f - ab);
    Tensor out(z.shape());
    const float* pz = z.data();
    const float* pe = eps.data();
    float* po = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) po[i] = c0 * pz[i] + c1 * pe[i];
    check_finite(out, "q_sample");
    return out;
}

inline Tensor sample_noise_like(const Tensor& z, Rng& rng) {
    Tensor eps(z.shape());
    rng.fill_normal(eps.values());
    return eps;
}

}  // namespace avdiff
