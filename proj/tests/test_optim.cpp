#include <cmath>
#include <vector>

#include "avdiff/graph.hpp"
#include "avdiff/optim.hpp"
#include "avdiff/tensor.hpp"
#include "doctest.h"

using namespace avdiff;

TEST_CASE("zero gradient leaves parameters unchanged") {
    Tensor p(Shape{3}, std::vector<float>{1, -2, 3});
    p.set_requires_grad();
    std::vector<Tensor> params{p};
    Adam opt;
    opt.step(params);
    CHECK(p.data()[0] == 1.0f);
    CHECK(p.data()[1] == -2.0f);
    CHECK(p.data()[2] == 3.0f);
}

TEST_CASE("constant gradient moves parameter against its sign") {
    Tensor p(Shape{2}, std::vector<float>{0.0f, 0.0f});
    p.set_requires_grad();
    std::vector<Tensor> params{p};
    Adam opt(AdamConfig{.lr = 0.01f});
    for (int i = 0; i < 50; ++i) {
        p.grad()[0] = 2.0f;
        p.grad()[1] = -0.5f;
        opt.step(params);
    }
    CHECK(p.data()[0] < 0.0f);
    CHECK(p.data()[1] > 0.0f);
}

TEST_CASE("first step from zero moments is -lr * sign(g)") {
    // With zero moments, mhat = g and vhat = g^2, so the update is
    // lr * g / (|g| + eps).
    for (float g : {0.7f, -3.0f, 0.01f}) {
        Tensor p(Shape{1}, std::vector<float>{0.0f});
        p.set_requires_grad();
        std::vector<Tensor> params{p};
        Adam opt(AdamConfig{.lr = 0.05f});
        p.grad()[0] = g;
        opt.step(params);
        const float expected = -0.05f * (g > 0 ? 1.0f : -1.0f);
        CHECK(p.data()[0] == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("adam is deterministic across identical runs") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        Tensor p = Tensor::randn(Shape{8}, rng);
        p.set_requires_grad();
        std::vector<Tensor> params{p};
        Adam opt;
        Tensor target = Tensor::randn(Shape{8}, rng);
        for (int i = 0; i < 20; ++i) {
            p.zero_grad();
            Graph g;
            g.backward(g.mse(p, target));
            opt.step(params);
        }
        return p.values();
    };
    auto a = run(5);
    auto b = run(5);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
