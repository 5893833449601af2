#include <cmath>

#include "avdiff/codec.hpp"
#include "avdiff/rng.hpp"
#include "avdiff/tensor.hpp"
#include "doctest.h"

using namespace avdiff;

TEST_CASE("encode shape contract: 2x2 patches, 12 channels") {
    Tensor v(Shape{16, 32, 32, 3});
    Tensor z = patch_encode(v);
    CHECK(z.shape() == Shape{16, 16, 16, 12});
    CHECK_THROWS_AS(patch_encode(Tensor(Shape{2, 5, 4, 3})), DimError);
    CHECK_THROWS_AS(patch_encode(Tensor(Shape{2, 4, 4, 1})), DimError);
}

TEST_CASE("roundtrip is exact to float precision") {
    Rng rng(13);
    Tensor v = Tensor::randn(Shape{4, 8, 10, 3}, rng);
    Tensor back = patch_decode(patch_encode(v));
    REQUIRE(back.shape() == v.shape());
    float worst = 0.0f;
    for (std::size_t i = 0; i < v.size(); ++i) {
        worst = std::max(worst, std::abs(back.data()[i] - v.data()[i]));
    }
    CHECK(worst < 1e-6f);
}

TEST_CASE("constant gray frame lands only in the DC channels") {
    Tensor v = Tensor::full(Shape{2, 4, 4, 3}, 0.5f);
    Tensor z = patch_encode(v);
    for (int t = 0; t < 2; ++t) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (int c = 0; c < 12; ++c) {
                    float val = z.data()[((t * 2 + i) * 2 + j) * 12 + c];
                    if (c < 3) {
                        CHECK(val == doctest::Approx(1.0f));  // 0.5 * 4 * 0.5
                    } else {
                        CHECK(val == 0.0f);
                    }
                }
            }
        }
    }
}

TEST_CASE("transform preserves the L2 norm") {
    Rng rng(29);
    Tensor v = Tensor::randn(Shape{3, 6, 8, 3}, rng);
    Tensor z = patch_encode(v);
    double nv = 0.0, nz = 0.0;
    for (float x : v.values()) nv += static_cast<double>(x) * x;
    for (float x : z.values()) nz += static_cast<double>(x) * x;
    CHECK(std::sqrt(nz) == doctest::Approx(std::sqrt(nv)).epsilon(1e-5));
}

TEST_CASE("channel layout converters invert each other") {
    Rng rng(31);
    Tensor v = Tensor::randn(Shape{2, 3, 4, 5}, rng);
    Tensor cf = to_channel_first(v);
    CHECK(cf.shape() == Shape{2, 5, 3, 4});
    Tensor back = to_channel_last(cf);
    REQUIRE(back.shape() == v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(back.data()[i] == v.data()[i]);
}
