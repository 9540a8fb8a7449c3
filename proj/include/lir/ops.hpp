#pragma once

#include <array>
#include <cstdint>

#include "lir/tape.hpp"
#include "lir/tensor.hpp"

// Differentiable tensor operations. Every op takes an optional tape; with a
// null tape (or when no input requires grad) it runs forward-only. Feature
// maps are laid out C x H x W row-major, kernels C_out x C_in/groups x kh x kw
// for conv2d and C_in x C_out x k x k for conv_transpose2d, so one buffer can
// serve as both sides of the adjoint pair. Convolution is cross-correlation
// (no kernel flip) with zero padding and floor output sizing.

namespace lir::ops {

struct Conv2dOpts {
    std::int64_t stride = 1;
    std::int64_t padding = 0;
    std::int64_t groups = 1;
};

struct ConvTranspose2dOpts {
    std::int64_t stride = 1;
    std::int64_t padding = 0;
    std::int64_t output_padding = 0;
};

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>* bias,
                 const Conv2dOpts& opts, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>* bias,
                           const ConvTranspose2dOpts& opts, Tape<T>* tape = nullptr);

// One fixed 3x3 kernel applied per channel (pad 1, stride 1), shared across
// all channels. Differentiable w.r.t. the input only; the kernel is a
// constant. This is the Adaptive Filter branch primitive.
template <typename T>
Tensor<T> depthwise3x3(const Tensor<T>& input, const std::array<T, 9>& kernel,
                       Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);
template <typename T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);
template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);

// y = c * x for a plain constant.
template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c, Tape<T>* tape = nullptr);

// y = s[index] * x where s is a parameter tensor (gradient flows into both).
template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s, std::int64_t index = 0,
                   Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Tape<T>* tape = nullptr);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> sum(const Tensor<T>& x, Tape<T>* tape = nullptr);
template <typename T>
Tensor<T> mean(const Tensor<T>& x, Tape<T>* tape = nullptr);

// C x H x W -> C x 1 x 1 spatial mean.
template <typename T>
Tensor<T> global_average_pool(const Tensor<T>& x, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape, Tape<T>* tape = nullptr);

// C x H x W -> (H*W / (ph*pw)) x (ph*pw*C). Patches scan the grid row-major;
// within a row the layout is channel-major, (ph, pw) row-major per channel.
template <typename T>
Tensor<T> patchify(const Tensor<T>& x, std::int64_t ph, std::int64_t pw, Tape<T>* tape = nullptr);

// Exact inverse of patchify for the stated geometry.
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& p, std::int64_t channels, std::int64_t height,
                     std::int64_t width, std::int64_t ph, std::int64_t pw,
                     Tape<T>* tape = nullptr);

// (m x k) . (k x n) -> m x n.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape = nullptr);

// rows x d plus a length-d bias broadcast over rows.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias, Tape<T>* tape = nullptr);

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t c0, std::int64_t c1,
                         Tape<T>* tape = nullptr);

// x (C x H x W) scaled per channel by s (C or C x 1 x 1).
template <typename T>
Tensor<T> mul_channels(const Tensor<T>& x, const Tensor<T>& s, Tape<T>* tape = nullptr);

// x (C x H x W) scaled per patch by gains (one value per patch, grid
// row-major, same gain for every channel).
template <typename T>
Tensor<T> mul_patch_gains(const Tensor<T>& x, const Tensor<T>& gains, std::int64_t ph,
                          std::int64_t pw, Tape<T>* tape = nullptr);

// Mean absolute difference; gradient is sign(pred - target)/N.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tape<T>* tape = nullptr);

}  // namespace lir::ops
