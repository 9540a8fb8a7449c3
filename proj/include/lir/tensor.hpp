#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "lir/common.hpp"

namespace lir {

namespace detail {
template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;
};
}  // namespace detail

// Dense row-major tensor with shared-ownership value semantics: copying a
// Tensor aliases the same buffer. Ops never mutate their inputs; the only
// in-place writes are gradient accumulation during backward and direct
// parameter updates by the optimizer/initializers.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        Tensor t;
        t.impl_ = std::make_shared<detail::TensorImpl<T>>();
        t.impl_->shape = std::move(shape);
        t.impl_->data.assign(static_cast<std::size_t>(numel_of(t.impl_->shape)), T(0));
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    static Tensor full(Shape shape, T value) {
        Tensor t = zeros(std::move(shape));
        std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
        return t;
    }

    static Tensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false) {
        LIR_CHECK(static_cast<std::int64_t>(values.size()) == numel_of(shape),
                  "tensor data length " << values.size() << " does not match shape "
                                        << shape_str(shape));
        Tensor t;
        t.impl_ = std::make_shared<detail::TensorImpl<T>>();
        t.impl_->shape = std::move(shape);
        t.impl_->data = std::move(values);
        t.impl_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(T value, bool requires_grad = false) {
        return from_data({1}, {value}, requires_grad);
    }

    bool defined() const { return impl_ != nullptr; }

    const Shape& shape() const { return impl_->shape; }
    std::size_t ndim() const { return impl_->shape.size(); }
    std::int64_t dim(std::size_t i) const { return impl_->shape[i]; }
    std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

    const T* data() const { return impl_->data.data(); }
    T* data() { return impl_->data.data(); }

    T item() const {
        LIR_CHECK(numel() == 1, "item() requires a scalar tensor, got " << shape_str(shape()));
        return impl_->data[0];
    }

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        impl_->requires_grad = v;
        return *this;
    }

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    const T* grad() const { return impl_->grad.data(); }

    // Gradient buffer for accumulation, zero-allocated on first use.
    T* grad_accum() {
        if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
        return impl_->grad.data();
    }

    void zero_grad() {
        if (impl_) impl_->grad.clear();
    }

    Tensor clone() const {
        Tensor t;
        t.impl_ = std::make_shared<detail::TensorImpl<T>>();
        t.impl_->shape = impl_->shape;
        t.impl_->data = impl_->data;
        t.impl_->requires_grad = impl_->requires_grad;
        return t;
    }

    template <typename U>
    Tensor<U> cast() const {
        std::vector<U> out(impl_->data.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<U>(impl_->data[i]);
        return Tensor<U>::from_data(impl_->shape, std::move(out), impl_->requires_grad);
    }

    bool all_finite() const {
        for (const T v : impl_->data) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    bool same_buffer(const Tensor& other) const { return impl_ == other.impl_; }

private:
    std::shared_ptr<detail::TensorImpl<T>> impl_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace lir
