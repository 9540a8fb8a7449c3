#pragma once

#include <functional>
#include <vector>

#include "lir/tensor.hpp"

namespace lir {

// Reverse-mode tape. Ops executed with a live tape push one closure each, in
// execution order; backward() replays them once in reverse, accumulating
// gradients additively into every tensor that feeds multiple consumers.
// A tape is single-owner and consumed by its first backward().
template <typename T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    void record(std::function<void()> fn) { nodes_.push_back(std::move(fn)); }

    std::size_t size() const { return nodes_.size(); }
    bool consumed() const { return consumed_; }

    void backward(Tensor<T> loss) {
        LIR_CHECK(!consumed_, "backward() called on a consumed tape");
        LIR_CHECK(!nodes_.empty(), "backward() on an empty tape");
        LIR_CHECK(loss.numel() == 1, "backward() requires a scalar loss, got "
                                         << shape_str(loss.shape()));
        loss.grad_accum()[0] += T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
        nodes_.clear();  // release saved intermediates
        consumed_ = true;
    }

private:
    std::vector<std::function<void()>> nodes_;
    bool consumed_ = false;
};

using TapeF = Tape<float>;
using TapeD = Tape<double>;

}  // namespace lir
