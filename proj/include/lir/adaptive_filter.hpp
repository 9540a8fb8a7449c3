#pragma once

#include <array>
#include <string>

#include "lir/layers.hpp"
#include "lir/ops.hpp"

namespace lir {

// Fixed 3x3 differential kernel bank, written in cross-correlation form.
// Every non-identity kernel sums to zero (no response to constants); the
// bank order is load-bearing for checkpoints and alpha indexing.
class KernelBank {
public:
    static constexpr std::int64_t kSize = 10;
    enum Index : std::int64_t {
        kIdentity = 0,
        kRobertsX,
        kRobertsY,
        kSobelX,
        kSobelY,
        kLaplacian4,
        kLaplacian8,
        kHighPass,
        kScharrX,
        kScharrY,
    };

    template <typename T>
    static std::array<T, 9> kernel(std::int64_t i);

    static const char* name(std::int64_t i);

    // The binomial blur G with high_pass = identity - G.
    template <typename T>
    static std::array<T, 9> gaussian3x3();
};

// Weighted bank of fixed 3x3 kernels applied depthwise with the same kernel
// on every channel: y = sum_i alpha[i] * (K_i * x). Ten learnable scalars
// per filter. Linearity makes the whole bank fold into one 3x3 kernel for
// inference (fuse_kernel), with identical outputs up to rounding.
template <typename T>
struct AdaptiveFilter {
    Tensor<T> alpha;        // {10}, absent in fused mode
    Tensor<T> fused_kernel; // {3,3}, present in fused mode
    bool fused = false;

    // alpha starts one-hot on the identity branch, so a fresh filter is an
    // identity map.
    static AdaptiveFilter identity_init();

    static AdaptiveFilter from_fused(Tensor<T> kernel3x3);

    Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape = nullptr) const;

    // K_fused = sum_i alpha[i] * K_i, shape {3,3}.
    Tensor<T> fuse() const;

    // The paper-style two-operator split: (all non-high-pass branches folded
    // into one 3x3, the high-pass term alone). Their sum equals fuse().
    std::pair<Tensor<T>, Tensor<T>> fuse_two_operator() const;

    void make_fused();

    void collect(ParamSet<T>& ps, const std::string& prefix);
};

}  // namespace lir
