#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avdiff/errors.hpp"
#include "avdiff/rng.hpp"

namespace avdiff {

// Extents of a dense row-major tensor. Rank 0 is a scalar with one element.
using Shape = std::vector<int>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (int e : shape) {
        if (e <= 0) throw DimError("tensor extent must be positive, got " + std::to_string(e));
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

// Dense float32 tensor, row-major, with an optional gradient buffer of the
// same shape. Copies share storage; ops never mutate inputs except through
// explicit optimizer updates.
class Tensor {
public:
    Tensor() : impl_(std::make_shared<Impl>()) {}

    explicit Tensor(Shape shape, float fill = 0.0f) : impl_(std::make_shared<Impl>()) {
        impl_->shape = std::move(shape);
        impl_->values.assign(shape_numel(impl_->shape), fill);
    }

    Tensor(Shape shape, std::vector<float> values) : impl_(std::make_shared<Impl>()) {
        std::size_t n = shape_numel(shape);
        if (values.size() != n) {
            throw DimError("data length " + std::to_string(values.size()) +
                           " does not match shape " + shape_str(shape));
        }
        impl_->shape = std::move(shape);
        impl_->values = std::move(values);
    }

    static Tensor scalar(float v) { return Tensor(Shape{}, std::vector<float>{v}); }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }

    static Tensor full(Shape shape, float v) { return Tensor(std::move(shape), v); }

    static Tensor randn(Shape shape, Rng& rng, float stddev = 1.0f) {
        Tensor t(std::move(shape));
        for (float& x : t.values()) x = rng.normal() * stddev;
        return t;
    }

    const Shape& shape() const { return impl_->shape; }
    int dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t size() const { return impl_->values.size(); }

    std::vector<float>& values() { return impl_->values; }
    const std::vector<float>& values() const { return impl_->values; }
    float* data() { return impl_->values.data(); }
    const float* data() const { return impl_->values.data(); }

    float item() const {
        if (size() != 1) throw ContractError("item() requires a single-element tensor");
        return impl_->values[0];
    }

    bool requires_grad() const { return impl_->requires_grad; }

    Tensor& set_requires_grad(bool on = true) {
        impl_->requires_grad = on;
        if (on && impl_->grad.size() != impl_->values.size()) {
            impl_->grad.assign(impl_->values.size(), 0.0f);
        }
        return *this;
    }

    // Gradient buffer; allocated on demand, always same shape as values.
    // Mutable through const handles so backward closures can accumulate.
    std::vector<float>& grad() const {
        if (impl_->grad.size() != impl_->values.size()) {
            impl_->grad.assign(impl_->values.size(), 0.0f);
        }
        return impl_->grad;
    }

    void zero_grad() {
        if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
    }

    // Deep copy with fresh storage; gradient buffer is not copied.
    Tensor clone() const {
        Tensor t(impl_->shape, impl_->values);
        t.impl_->requires_grad = impl_->requires_grad;
        return t;
    }

    // Identity of the shared storage; used as an optimizer state key.
    const void* id() const { return impl_.get(); }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        std::vector<float> values;
        bool requires_grad = false;
        mutable std::vector<float> grad;
    };
    std::shared_ptr<Impl> impl_;
};

// Every op validates its output with this; NaN/Inf anywhere is an error.
inline void check_finite(const Tensor& t, const char* where) {
    for (float x : t.values()) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string("non-finite value produced by ") + where);
        }
    }
}

inline void check_finite(std::span<const float> xs, const char* where) {
    for (float x : xs) {
        if (!std::isfinite(x)) {
            throw NumericError(std::string("non-finite value in ") + where);
        }
    }
}

}  // namespace avdiff
