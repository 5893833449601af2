#pragma once

#include <cmath>
#include <cstddef>
#include <unordered_map>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/tensor.hpp"

namespace avdiff {

struct AdamConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
};

// Standard Adam with bias correction. Moment buffers are keyed by parameter
// storage identity and updated independently, so map order never affects the
// result.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(std::vector<Tensor>& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), t_);
        const double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), t_);
        for (Tensor& p : params) {
            State& st = states_[p.id()];
            if (st.m.size() != p.size()) {
                st.m.assign(p.size(), 0.0f);
                st.v.assign(p.size(), 0.0f);
            }
            float* w = p.data();
            const float* g = p.grad().data();
            for (std::size_t i = 0; i < p.size(); ++i) {
                st.m[i] = cfg_.beta1 * st.m[i] + (1.0f - cfg_.beta1) * g[i];
                st.v[i] = cfg_.beta2 * st.v[i] + (1.0f - cfg_.beta2) * g[i] * g[i];
                const double mhat = st.m[i] / bc1;
                const double vhat = st.v[i] / bc2;
                w[i] -= static_cast<float>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
                if (!std::isfinite(w[i])) throw NumericError("non-finite parameter after adam");
            }
        }
    }

    int steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct State {
        std::vector<float> m, v;
    };
    AdamConfig cfg_;
    std::unordered_map<const void*, State> states_;
    int t_ = 0;
};

}  // namespace avdiff
