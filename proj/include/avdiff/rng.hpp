#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace avdiff {

// splitmix64; stable across platforms since it is pure integer arithmetic.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed, e.g. per sample index.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL + stream * 0xd1b54a32d192ed03ULL);
    splitmix64(s);
    return splitmix64(s);
}

// Deterministic RNG. All stochastic behaviour in the project flows through
// this so runs with equal seeds are bit-identical.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // Warm up so small seeds do not produce correlated first draws.
        splitmix64(state_);
    }

    std::uint64_t next_u64() { return splitmix64(state_); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(uniform()) * (hi - lo);
    }

    // Inclusive on both ends.
    int uniform_int(int lo, int hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    // Standard normal via Marsaglia polar; one spare cached.
    float normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform() * 2.0 - 1.0;
            v = uniform() * 2.0 - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = static_cast<float>(v * m);
        has_spare_ = true;
        return static_cast<float>(u * m);
    }

    void fill_normal(std::span<float> out) {
        for (float& x : out) x = normal();
    }

    void fill_uniform(std::span<float> out, float lo, float hi) {
        for (float& x : out) x = uniform(lo, hi);
    }

private:
    std::uint64_t state_;
    float spare_ = 0.0f;
    bool has_spare_ = false;
};

}  // namespace avdiff
