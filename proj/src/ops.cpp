#include "lir/ops.hpp"

#include <cstring>

#include "lir/kernels/kernels.hpp"

namespace lir::ops {
namespace {

template <typename T>
bool want_grad(Tape<T>* tape, std::initializer_list<const Tensor<T>*> inputs) {
    if (!tape) return false;
    for (const auto* t : inputs) {
        if (t && t->requires_grad()) return true;
    }
    return false;
}

std::int64_t conv_out_size(std::int64_t in, std::int64_t k, std::int64_t stride,
                           std::int64_t pad) {
    return (in + 2 * pad - k) / stride + 1;  // floor
}

}  // namespace

// ------------------------------------------------------------------ conv2d

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>* bias,
                 const Conv2dOpts& opts, Tape<T>* tape) {
    LIR_CHECK(input.ndim() == 3, "conv2d: input must be CxHxW, got " << shape_str(input.shape()));
    LIR_CHECK(kernel.ndim() == 4,
              "conv2d: kernel must be C_out x C_in/g x kh x kw, got " << shape_str(kernel.shape()));
    LIR_CHECK(opts.stride >= 1 && opts.padding >= 0 && opts.groups >= 1,
              "conv2d: bad stride/padding/groups");

    const std::int64_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    const std::int64_t c_out = kernel.dim(0), kc = kernel.dim(1), kh = kernel.dim(2),
                       kw = kernel.dim(3);
    const std::int64_t g = opts.groups, s = opts.stride, p = opts.padding;

    LIR_CHECK(c_in % g == 0 && c_out % g == 0,
              "conv2d: groups " << g << " must divide channels " << c_in << "->" << c_out);
    LIR_CHECK(kc == c_in / g, "conv2d: kernel expects " << kc * g << " input channels, got "
                                                        << c_in << " (groups " << g << ")");
    if (bias) {
        LIR_CHECK(bias->numel() == c_out,
                  "conv2d: bias length " << bias->numel() << " != out channels " << c_out);
    }

    const std::int64_t ho = conv_out_size(h, kh, s, p);
    const std::int64_t wo = conv_out_size(w, kw, s, p);
    LIR_CHECK(ho >= 1 && wo >= 1, "conv2d: empty output for input " << shape_str(input.shape())
                                                                    << " kernel "
                                                                    << shape_str(kernel.shape()));

    Tensor<T> out = Tensor<T>::zeros({c_out, ho, wo});
    const auto& kt = kernels::table<T>();
    const T* xd = input.data();
    const T* wd = kernel.data();
    T* od = out.data();

    const std::int64_t cpg_in = c_in / g, cpg_out = c_out / g;
    for (std::int64_t co = 0; co < c_out; ++co) {
        const std::int64_t grp = co / cpg_out;
        T* omap = od + co * ho * wo;
        if (bias) {
            const T b = bias->data()[co];
            for (std::int64_t i = 0; i < ho * wo; ++i) omap[i] = b;
        }
        for (std::int64_t cl = 0; cl < cpg_in; ++cl) {
            const std::int64_t ci = grp * cpg_in + cl;
            const T* xmap = xd + ci * h * w;
            const T* wk = wd + ((co * cpg_in + cl) * kh) * kw;
            if (s == 1) {
                // Row-wise axpy: each kernel tap adds a shifted input row.
                for (std::int64_t a = 0; a < kh; ++a) {
                    for (std::int64_t b = 0; b < kw; ++b) {
                        const T wv = wk[a * kw + b];
                        if (wv == T(0)) continue;
                        const std::int64_t j0 = std::max<std::int64_t>(0, p - b);
                        const std::int64_t j1 = std::min<std::int64_t>(wo, w + p - b);
                        if (j0 >= j1) continue;
                        for (std::int64_t i = 0; i < ho; ++i) {
                            const std::int64_t y = i - p + a;
                            if (y < 0 || y >= h) continue;
                            kt.axpy(wv, xmap + y * w + j0 + b - p, omap + i * wo + j0,
                                    static_cast<std::size_t>(j1 - j0));
                        }
                    }
                }
            } else {
                for (std::int64_t i = 0; i < ho; ++i) {
                    for (std::int64_t j = 0; j < wo; ++j) {
                        T acc = 0;
                        for (std::int64_t a = 0; a < kh; ++a) {
                            const std::int64_t y = i * s - p + a;
                            if (y < 0 || y >= h) continue;
                            for (std::int64_t b = 0; b < kw; ++b) {
                                const std::int64_t x = j * s - p + b;
                                if (x < 0 || x >= w) continue;
                                acc += wk[a * kw + b] * xmap[y * w + x];
                            }
                        }
                        omap[i * wo + j] += acc;
                    }
                }
            }
        }
    }

    const Tensor<T>* bias_in = bias;
    if (want_grad(tape, {&input, &kernel, bias_in})) {
        out.set_requires_grad(true);
        Tensor<T> x = input, k = kernel, o = out;
        Tensor<T> bt = bias ? *bias : Tensor<T>();
        const Conv2dOpts op = opts;
        tape->record([x, k, bt, o, op]() mutable {
            if (!o.has_grad()) return;
            const auto& ktab = kernels::table<T>();
            const std::int64_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
            const std::int64_t c_out = k.dim(0), cpg_in = k.dim(1), kh = k.dim(2), kw = k.dim(3);
            const std::int64_t s = op.stride, p = op.padding;
            const std::int64_t cpg_out = c_out / op.groups;
            const std::int64_t ho = o.dim(1), wo = o.dim(2);
            const T* go = o.grad();
            const T* xd = x.data();
            const T* wd = k.data();

            if (x.requires_grad()) {
                T* gx = x.grad_accum();
                for (std::int64_t co = 0; co < c_out; ++co) {
                    const std::int64_t grp = co / cpg_out;
                    const T* gomap = go + co * ho * wo;
                    for (std::int64_t cl = 0; cl < cpg_in; ++cl) {
                        const std::int64_t ci = grp * cpg_in + cl;
                        T* gxmap = gx + ci * h * w;
                        const T* wk = wd + ((co * cpg_in + cl) * kh) * kw;
                        if (s == 1) {
                            for (std::int64_t a = 0; a < kh; ++a) {
                                for (std::int64_t b = 0; b < kw; ++b) {
                                    const T wv = wk[a * kw + b];
                                    if (wv == T(0)) continue;
                                    const std::int64_t x0 = std::max<std::int64_t>(0, b - p);
                                    const std::int64_t x1 =
                                        std::min<std::int64_t>(w, wo + b - p);
                                    if (x0 >= x1) continue;
                                    for (std::int64_t y = 0; y < h; ++y) {
                                        const std::int64_t i = y + p - a;
                                        if (i < 0 || i >= ho) continue;
                                        ktab.axpy(wv, gomap + i * wo + x0 + p - b,
                                                  gxmap + y * w + x0,
                                                  static_cast<std::size_t>(x1 - x0));
                                    }
                                }
                            }
                        } else {
                            for (std::int64_t i = 0; i < ho; ++i) {
                                for (std::int64_t j = 0; j < wo; ++j) {
                                    const T gv = gomap[i * wo + j];
                                    if (gv == T(0)) continue;
                                    for (std::int64_t a = 0; a < kh; ++a) {
                                        const std::int64_t y = i * s - p + a;
                                        if (y < 0 || y >= h) continue;
                                        for (std::int64_t b = 0; b < kw; ++b) {
                                            const std::int64_t xx = j * s - p + b;
                                            if (xx < 0 || xx >= w) continue;
                                            gxmap[y * w + xx] += wk[a * kw + b] * gv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }

            if (k.requires_grad()) {
                T* gw = k.grad_accum();
                for (std::int64_t co = 0; co < c_out; ++co) {
                    const std::int64_t grp = co / cpg_out;
                    const T* gomap = go + co * ho * wo;
                    for (std::int64_t cl = 0; cl < cpg_in; ++cl) {
                        const std::int64_t ci = grp * cpg_in + cl;
                        const T* xmap = xd + ci * h * w;
                        T* gwk = gw + ((co * cpg_in + cl) * kh) * kw;
                        for (std::int64_t a = 0; a < kh; ++a) {
                            for (std::int64_t b = 0; b < kw; ++b) {
                                T acc = 0;
                                if (s == 1) {
                                    const std::int64_t j0 = std::max<std::int64_t>(0, p - b);
                                    const std::int64_t j1 =
                                        std::min<std::int64_t>(wo, w + p - b);
                                    if (j0 < j1) {
                                        for (std::int64_t i = 0; i < ho; ++i) {
                                            const std::int64_t y = i - p + a;
                                            if (y < 0 || y >= h) continue;
                                            acc += ktab.dot(gomap + i * wo + j0,
                                                            xmap + y * w + j0 + b - p,
                                                            static_cast<std::size_t>(j1 - j0));
                                        }
                                    }
                                } else {
                                    for (std::int64_t i = 0; i < ho; ++i) {
                                        const std::int64_t y = i * s - p + a;
                                        if (y < 0 || y >= h) continue;
                                        for (std::int64_t j = 0; j < wo; ++j) {
                                            const std::int64_t xx = j * s - p + b;
                                            if (xx < 0 || xx >= w) continue;
                                            acc += gomap[i * wo + j] * xmap[y * w + xx];
                                        }
                                    }
                                }
                                gwk[a * kw + b] += acc;
                            }
                        }
                    }
                }
            }

            if (bt.defined() && bt.requires_grad()) {
                T* gb = bt.grad_accum();
                for (std::int64_t co = 0; co < c_out; ++co) {
                    gb[co] += ktab.sum(go + co * ho * wo, static_cast<std::size_t>(ho * wo));
                }
            }
        });
    }
    return out;
}

// -------------------------------------------------------- conv_transpose2d

template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>* bias,
                           const ConvTranspose2dOpts& opts, Tape<T>* tape) {
    LIR_CHECK(input.ndim() == 3,
              "conv_transpose2d: input must be CxHxW, got " << shape_str(input.shape()));
    LIR_CHECK(kernel.ndim() == 4, "conv_transpose2d: kernel must be C_in x C_out x kh x kw, got "
                                      << shape_str(kernel.shape()));
    LIR_CHECK(opts.stride >= 1 && opts.padding >= 0 && opts.output_padding >= 0,
              "conv_transpose2d: bad stride/padding");
    LIR_CHECK(opts.output_padding < opts.stride,
              "conv_transpose2d: output_padding " << opts.output_padding
                                                  << " must be < stride " << opts.stride);

    const std::int64_t c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
    LIR_CHECK(kernel.dim(0) == c_in, "conv_transpose2d: kernel expects "
                                         << kernel.dim(0) << " input channels, got " << c_in);
    const std::int64_t c_out = kernel.dim(1), kh = kernel.dim(2), kw = kernel.dim(3);
    const std::int64_t s = opts.stride, p = opts.padding, op = opts.output_padding;
    const std::int64_t ho = (h - 1) * s - 2 * p + kh + op;
    const std::int64_t wo = (w - 1) * s - 2 * p + kw + op;
    LIR_CHECK(ho >= 1 && wo >= 1, "conv_transpose2d: empty output");
    if (bias) {
        LIR_CHECK(bias->numel() == c_out, "conv_transpose2d: bias length "
                                              << bias->numel() << " != out channels " << c_out);
    }

    Tensor<T> out = Tensor<T>::zeros({c_out, ho, wo});
    const auto& kt = kernels::table<T>();
    const T* xd = input.data();
    const T* wd = kernel.data();
    T* od = out.data();

    if (bias) {
        for (std::int64_t co = 0; co < c_out; ++co) {
            const T b = bias->data()[co];
            T* omap = od + co * ho * wo;
            for (std::int64_t i = 0; i < ho * wo; ++i) omap[i] = b;
        }
    }
    // Scatter each input pixel through the kernel window.
    for (std::int64_t ci = 0; ci < c_in; ++ci) {
        const T* xmap = xd + ci * h * w;
        for (std::int64_t co = 0; co < c_out; ++co) {
            T* omap = od + co * ho * wo;
            const T* wk = wd + ((ci * c_out + co) * kh) * kw;
            for (std::int64_t i = 0; i < h; ++i) {
                for (std::int64_t a = 0; a < kh; ++a) {
                    const std::int64_t oi = i * s - p + a;
                    if (oi < 0 || oi >= ho) continue;
                    T* orow = omap + oi * wo;
                    const T* xrow = xmap + i * w;
                    for (std::int64_t b = 0; b < kw; ++b) {
                        const T wv = wk[a * kw + b];
                        if (wv == T(0)) continue;
                        if (s == 1) {
                            const std::int64_t j0 = std::max<std::int64_t>(0, p - b);
                            const std::int64_t j1 = std::min<std::int64_t>(w, wo + p - b);
                            if (j0 < j1) {
                                kt.axpy(wv, xrow + j0, orow + j0 - p + b,
                                        static_cast<std::size_t>(j1 - j0));
                            }
                        } else {
                            for (std::int64_t j = 0; j < w; ++j) {
                                const std::int64_t oj = j * s - p + b;
                                if (oj < 0 || oj >= wo) continue;
                                orow[oj] += wv * xrow[j];
                            }
                        }
                    }
                }
            }
        }
    }

    const Tensor<T>* bias_in = bias;
    if (want_grad(tape, {&input, &kernel, bias_in})) {
        out.set_requires_grad(true);
        Tensor<T> x = input, k = kernel, o = out;
        Tensor<T> bt = bias ? *bias : Tensor<T>();
        const ConvTranspose2dOpts oo = opts;
        tape->record([x, k, bt, o, oo]() mutable {
            if (!o.has_grad()) return;
            const std::int64_t c_in = x.dim(0), h = x.dim(1), w = x.dim(2);
            const std::int64_t c_out = k.dim(1), kh = k.dim(2), kw = k.dim(3);
            const std::int64_t s = oo.stride, p = oo.padding;
            const std::int64_t ho = o.dim(1), wo = o.dim(2);
            const T* go = o.grad();
            const T* xd = x.data();
            const T* wd = k.data();
            const auto& ktab = kernels::table<T>();

            if (x.requires_grad()) {
                // Gather: the adjoint of the forward scatter.
                T* gx = x.grad_accum();
                for (std::int64_t ci = 0; ci < c_in; ++ci) {
                    T* gxmap = gx + ci * h * w;
                    for (std::int64_t co = 0; co < c_out; ++co) {
                        const T* gomap = go + co * ho * wo;
                        const T* wk = wd + ((ci * c_out + co) * kh) * kw;
                        for (std::int64_t i = 0; i < h; ++i) {
                            for (std::int64_t j = 0; j < w; ++j) {
                                T acc = 0;
                                for (std::int64_t a = 0; a < kh; ++a) {
                                    const std::int64_t oi = i * s - p + a;
                                    if (oi < 0 || oi >= ho) continue;
                                    for (std::int64_t b = 0; b < kw; ++b) {
                                        const std::int64_t oj = j * s - p + b;
                                        if (oj < 0 || oj >= wo) continue;
                                        acc += wk[a * kw + b] * gomap[oi * wo + oj];
                                    }
                                }
                                gxmap[i * w + j] += acc;
                            }
                        }
                    }
                }
            }

            if (k.requires_grad()) {
                T* gw = k.grad_accum();
                for (std::int64_t ci = 0; ci < c_in; ++ci) {
                    const T* xmap = xd + ci * h * w;
                    for (std::int64_t co = 0; co < c_out; ++co) {
                        const T* gomap = go + co * ho * wo;
                        T* gwk = gw + ((ci * c_out + co) * kh) * kw;
                        for (std::int64_t i = 0; i < h; ++i) {
                            for (std::int64_t a = 0; a < kh; ++a) {
                                const std::int64_t oi = i * s - p + a;
                                if (oi < 0 || oi >= ho) continue;
                                for (std::int64_t b = 0; b < kw; ++b) {
                                    T acc = 0;
                                    for (std::int64_t j = 0; j < w; ++j) {
                                        const std::int64_t oj = j * s - p + b;
                                        if (oj < 0 || oj >= wo) continue;
                                        acc += xmap[i * w + j] * gomap[oi * wo + oj];
                                    }
                                    gwk[a * kw + b] += acc;
                                }
                            }
                        }
                    }
                }
            }

            if (bt.defined() && bt.requires_grad()) {
                T* gb = bt.grad_accum();
                for (std::int64_t co = 0; co < c_out; ++co) {
                    gb[co] += ktab.sum(go + co * ho * wo, static_cast<std::size_t>(ho * wo));
                }
            }
        });
    }
    return out;
}

// ------------------------------------------------------------ depthwise3x3

template <typename T>
Tensor<T> depthwise3x3(const Tensor<T>& input, const std::array<T, 9>& kernel, Tape<T>* tape) {
    LIR_CHECK(input.ndim() == 3,
              "depthwise3x3: input must be CxHxW, got " << shape_str(input.shape()));
    const std::int64_t c = input.dim(0), h = input.dim(1), w = input.dim(2);

    Tensor<T> out = Tensor<T>::zeros(input.shape());
    const auto& kt = kernels::table<T>();
    const T* xd = input.data();
    T* od = out.data();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        const T* xmap = xd + ch * h * w;
        T* omap = od + ch * h * w;
        for (std::int64_t a = 0; a < 3; ++a) {
            for (std::int64_t b = 0; b < 3; ++b) {
                const T wv = kernel[static_cast<std::size_t>(a * 3 + b)];
                if (wv == T(0)) continue;
                const std::int64_t j0 = std::max<std::int64_t>(0, 1 - b);
                const std::int64_t j1 = std::min<std::int64_t>(w, w + 1 - b);
                if (j0 >= j1) continue;
                for (std::int64_t i = 0; i < h; ++i) {
                    const std::int64_t y = i - 1 + a;
                    if (y < 0 || y >= h) continue;
                    kt.axpy(wv, xmap + y * w + j0 + b - 1, omap + i * w + j0,
                            static_cast<std::size_t>(j1 - j0));
                }
            }
        }
    }

    if (want_grad(tape, {&input})) {
        out.set_requires_grad(true);
        Tensor<T> x = input, o = out;
        const std::array<T, 9> kcopy = kernel;
        tape->record([x, o, kcopy]() mutable {
            if (!o.has_grad() || !x.requires_grad()) return;
            const auto& ktab = kernels::table<T>();
            const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
            const T* go = o.grad();
            T* gx = x.grad_accum();
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T* gomap = go + ch * h * w;
                T* gxmap = gx + ch * h * w;
                for (std::int64_t a = 0; a < 3; ++a) {
                    for (std::int64_t b = 0; b < 3; ++b) {
                        const T wv = kcopy[static_cast<std::size_t>(a * 3 + b)];
                        if (wv == T(0)) continue;
                        const std::int64_t x0 = std::max<std::int64_t>(0, b - 1);
                        const std::int64_t x1 = std::min<std::int64_t>(w, w + b - 1);
                        if (x0 >= x1) continue;
                        for (std::int64_t y = 0; y < h; ++y) {
                            const std::int64_t i = y + 1 - a;
                            if (i < 0 || i >= h) continue;
                            ktab.axpy(wv, gomap + i * w + x0 + 1 - b, gxmap + y * w + x0,
                                      static_cast<std::size_t>(x1 - x0));
                        }
                    }
                }
            }
        });
    }
    return out;
}

// ------------------------------------------------------------- elementwise

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
    LIR_CHECK(a.shape() == b.shape(), "add: shape mismatch " << shape_str(a.shape()) << " vs "
                                                             << shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::table<T>().add(a.data(), b.data(), out.data(), static_cast<std::size_t>(a.numel()));
    if (want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor<T> at = a, bt = b, o = out;
        tape->record([at, bt, o]() mutable {
            if (!o.has_grad()) return;
            const std::size_t n = static_cast<std::size_t>(o.numel());
            const auto& kt = kernels::table<T>();
            if (at.requires_grad()) kt.axpy(T(1), o.grad(), at.grad_accum(), n);
            if (bt.requires_grad()) kt.axpy(T(1), o.grad(), bt.grad_accum(), n);
        });
    }
    return out;
}

template <typename T>
Tensor<T> subtract(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
    LIR_CHECK(a.shape() == b.shape(), "subtract: shape mismatch " << shape_str(a.shape()) << " vs "
                                                                  << shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::table<T>().sub(a.data(), b.data(), out.data(), static_cast<std::size_t>(a.numel()));
    if (want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor<T> at = a, bt = b, o = out;
        tape->record([at, bt, o]() mutable {
            if (!o.has_grad()) return;
            const std::size_t n = static_cast<std::size_t>(o.numel());
            const auto& kt = kernels::table<T>();
            if (at.requires_grad()) kt.axpy(T(1), o.grad(), at.grad_accum(), n);
            if (bt.requires_grad()) kt.axpy(T(-1), o.grad(), bt.grad_accum(), n);
        });
    }
    return out;
}

template <typename T>
Tensor<T> multiply(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
    LIR_CHECK(a.shape() == b.shape(), "multiply: shape mismatch " << shape_str(a.shape()) << " vs "
                                                                  << shape_str(b.shape()));
    Tensor<T> out = Tensor<T>::zeros(a.shape());
    kernels::table<T>().mul(a.data(), b.data(), out.data(), static_cast<std::size_t>(a.numel()));
    if (want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor<T> at = a, bt = b, o = out;
        tape->record([at, bt, o]() mutable {
            if (!o.has_grad()) return;
            const std::size_t n = static_cast<std::size_t>(o.numel());
            const auto& kt = kernels::table<T>();
            if (at.requires_grad()) kt.madd(o.grad(), bt.data(), at.grad_accum(), n);
            if (bt.requires_grad()) kt.madd(o.grad(), at.data(), bt.grad_accum(), n);
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, T c, Tape<T>* tape) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    kernels::table<T>().scale(x.data(), c, out.data(), static_cast<std::size_t>(x.numel()));
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o, c]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            kernels::table<T>().axpy(c, o.grad(), xt.grad_accum(),
                                     static_cast<std::size_t>(o.numel()));
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale_by(const Tensor<T>& x, const Tensor<T>& s, std::int64_t index, Tape<T>* tape) {
    LIR_CHECK(index >= 0 && index < s.numel(),
              "scale_by: index " << index << " out of range for " << shape_str(s.shape()));
    const T c = s.data()[index];
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    kernels::table<T>().scale(x.data(), c, out.data(), static_cast<std::size_t>(x.numel()));
    if (want_grad(tape, {&x, &s})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, st = s, o = out;
        tape->record([xt, st, o, c, index]() mutable {
            if (!o.has_grad()) return;
            const std::size_t n = static_cast<std::size_t>(o.numel());
            const auto& kt = kernels::table<T>();
            if (xt.requires_grad()) kt.axpy(c, o.grad(), xt.grad_accum(), n);
            if (st.requires_grad()) st.grad_accum()[index] += kt.dot(o.grad(), xt.data(), n);
        });
    }
    return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x, Tape<T>* tape) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    kernels::table<T>().relu(x.data(), out.data(), static_cast<std::size_t>(x.numel()));
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            kernels::table<T>().relu_bwd(xt.data(), o.grad(), xt.grad_accum(),
                                         static_cast<std::size_t>(o.numel()));
        });
    }
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x, Tape<T>* tape) {
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    const T* xd = x.data();
    T* od = out.data();
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) od[i] = T(1) / (T(1) + std::exp(-xd[i]));
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            const T* y = o.data();
            const T* go = o.grad();
            T* gx = xt.grad_accum();
            const std::int64_t n = o.numel();
            for (std::int64_t i = 0; i < n; ++i) gx[i] += go[i] * y[i] * (T(1) - y[i]);
        });
    }
    return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x, Tape<T>* tape) {
    Tensor<T> out =
        Tensor<T>::scalar(kernels::table<T>().sum(x.data(), static_cast<std::size_t>(x.numel())));
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            const T g = o.grad()[0];
            T* gx = xt.grad_accum();
            const std::int64_t n = xt.numel();
            for (std::int64_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x, Tape<T>* tape) {
    const T inv = T(1) / static_cast<T>(x.numel());
    Tensor<T> out = Tensor<T>::scalar(
        kernels::table<T>().sum(x.data(), static_cast<std::size_t>(x.numel())) * inv);
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o, inv]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            const T g = o.grad()[0] * inv;
            T* gx = xt.grad_accum();
            const std::int64_t n = xt.numel();
            for (std::int64_t i = 0; i < n; ++i) gx[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> global_average_pool(const Tensor<T>& x, Tape<T>* tape) {
    LIR_CHECK(x.ndim() == 3, "global_average_pool: input must be CxHxW");
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const T inv = T(1) / static_cast<T>(h * w);
    Tensor<T> out = Tensor<T>::zeros({c, 1, 1});
    const auto& kt = kernels::table<T>();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        out.data()[ch] = kt.sum(x.data() + ch * h * w, static_cast<std::size_t>(h * w)) * inv;
    }
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o, inv, c, h, w]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            T* gx = xt.grad_accum();
            const T* go = o.grad();
            for (std::int64_t ch = 0; ch < c; ++ch) {
                const T g = go[ch] * inv;
                T* gmap = gx + ch * h * w;
                for (std::int64_t i = 0; i < h * w; ++i) gmap[i] += g;
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape, Tape<T>* tape) {
    LIR_CHECK(numel_of(shape) == x.numel(), "reshape: cannot view " << shape_str(x.shape())
                                                                    << " as " << shape_str(shape));
    Tensor<T> out = Tensor<T>::from_data(std::move(shape),
                                         std::vector<T>(x.data(), x.data() + x.numel()));
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            kernels::table<T>().axpy(T(1), o.grad(), xt.grad_accum(),
                                     static_cast<std::size_t>(o.numel()));
        });
    }
    return out;
}

// --------------------------------------------------------------- patchify

namespace {

// Shared by forward and the adjoints: walks every (patch row, element) pair.
// gather: dst row-major patches, src CxHxW. scatter reverses roles.
template <typename T, bool gather>
void patch_walk(T* patches, T* image, std::int64_t c, std::int64_t h, std::int64_t w,
                std::int64_t ph, std::int64_t pw, bool accumulate) {
    const std::int64_t gw = w / pw;
    const std::int64_t gh = h / ph;
    const std::int64_t row_len = ph * pw * c;
    for (std::int64_t pr = 0; pr < gh; ++pr) {
        for (std::int64_t pc = 0; pc < gw; ++pc) {
            T* prow = patches + (pr * gw + pc) * row_len;
            for (std::int64_t ch = 0; ch < c; ++ch) {
                for (std::int64_t a = 0; a < ph; ++a) {
                    T* pseg = prow + (ch * ph + a) * pw;
                    T* iseg = image + ch * h * w + (pr * ph + a) * w + pc * pw;
                    T* dst = gather ? pseg : iseg;
                    const T* src = gather ? iseg : pseg;
                    if (accumulate) {
                        for (std::int64_t b = 0; b < pw; ++b) dst[b] += src[b];
                    } else {
                        std::memcpy(dst, src, sizeof(T) * static_cast<std::size_t>(pw));
                    }
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> patchify(const Tensor<T>& x, std::int64_t ph, std::int64_t pw, Tape<T>* tape) {
    LIR_CHECK(x.ndim() == 3, "patchify: input must be CxHxW, got " << shape_str(x.shape()));
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    LIR_CHECK(ph >= 1 && pw >= 1 && h % ph == 0 && w % pw == 0,
              "patchify: " << h << "x" << w << " not divisible by patch " << ph << "x" << pw);
    Tensor<T> out = Tensor<T>::zeros({(h / ph) * (w / pw), ph * pw * c});
    patch_walk<T, true>(out.data(), const_cast<T*>(x.data()), c, h, w, ph, pw, false);
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o, c, h, w, ph, pw]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            patch_walk<T, false>(const_cast<T*>(o.grad()), xt.grad_accum(), c, h, w, ph, pw, true);
        });
    }
    return out;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& p, std::int64_t channels, std::int64_t height,
                     std::int64_t width, std::int64_t ph, std::int64_t pw, Tape<T>* tape) {
    LIR_CHECK(p.ndim() == 2, "unpatchify: input must be rows x row_len");
    LIR_CHECK(height % ph == 0 && width % pw == 0, "unpatchify: grid does not divide image");
    LIR_CHECK(p.dim(0) == (height / ph) * (width / pw) && p.dim(1) == ph * pw * channels,
              "unpatchify: patch tensor " << shape_str(p.shape()) << " does not match geometry");
    Tensor<T> out = Tensor<T>::zeros({channels, height, width});
    patch_walk<T, false>(const_cast<T*>(p.data()), out.data(), channels, height, width, ph, pw,
                         false);
    if (want_grad(tape, {&p})) {
        out.set_requires_grad(true);
        Tensor<T> pt = p, o = out;
        tape->record([pt, o, channels, height, width, ph, pw]() mutable {
            if (!o.has_grad() || !pt.requires_grad()) return;
            patch_walk<T, true>(pt.grad_accum(), const_cast<T*>(o.grad()), channels, height, width,
                                ph, pw, true);
        });
    }
    return out;
}

// ----------------------------------------------------------------- matmul

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, Tape<T>* tape) {
    LIR_CHECK(a.ndim() == 2 && b.ndim() == 2, "matmul: both operands must be 2-D");
    LIR_CHECK(a.dim(1) == b.dim(0), "matmul: inner dimensions " << a.dim(1) << " vs " << b.dim(0));
    const std::int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Tensor<T> out = Tensor<T>::zeros({m, n});
    const auto& kt = kernels::table<T>();
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a.data() + i * k;
        T* orow = out.data() + i * n;
        for (std::int64_t l = 0; l < k; ++l) {
            if (arow[l] != T(0)) {
                kt.axpy(arow[l], b.data() + l * n, orow, static_cast<std::size_t>(n));
            }
        }
    }
    if (want_grad(tape, {&a, &b})) {
        out.set_requires_grad(true);
        Tensor<T> at = a, btn = b, o = out;
        tape->record([at, btn, o, m, k, n]() mutable {
            if (!o.has_grad()) return;
            const auto& kt = kernels::table<T>();
            const T* go = o.grad();
            if (at.requires_grad()) {
                T* ga = at.grad_accum();
                for (std::int64_t i = 0; i < m; ++i) {
                    for (std::int64_t l = 0; l < k; ++l) {
                        ga[i * k + l] +=
                            kt.dot(go + i * n, btn.data() + l * n, static_cast<std::size_t>(n));
                    }
                }
            }
            if (btn.requires_grad()) {
                T* gb = btn.grad_accum();
                for (std::int64_t i = 0; i < m; ++i) {
                    const T* arow = at.data() + i * k;
                    for (std::int64_t l = 0; l < k; ++l) {
                        if (arow[l] != T(0)) {
                            kt.axpy(arow[l], go + i * n, gb + l * n, static_cast<std::size_t>(n));
                        }
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& x, const Tensor<T>& bias, Tape<T>* tape) {
    LIR_CHECK(x.ndim() == 2, "add_row_bias: input must be rows x d");
    LIR_CHECK(bias.numel() == x.dim(1), "add_row_bias: bias length " << bias.numel()
                                                                     << " != row width "
                                                                     << x.dim(1));
    const std::int64_t rows = x.dim(0), d = x.dim(1);
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    const auto& kt = kernels::table<T>();
    for (std::int64_t r = 0; r < rows; ++r) {
        kt.add(x.data() + r * d, bias.data(), out.data() + r * d, static_cast<std::size_t>(d));
    }
    if (want_grad(tape, {&x, &bias})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, bt = bias, o = out;
        tape->record([xt, bt, o, rows, d]() mutable {
            if (!o.has_grad()) return;
            const auto& kt = kernels::table<T>();
            if (xt.requires_grad()) {
                kt.axpy(T(1), o.grad(), xt.grad_accum(), static_cast<std::size_t>(rows * d));
            }
            if (bt.requires_grad()) {
                T* gb = bt.grad_accum();
                for (std::int64_t r = 0; r < rows; ++r) {
                    kt.axpy(T(1), o.grad() + r * d, gb, static_cast<std::size_t>(d));
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t c0, std::int64_t c1, Tape<T>* tape) {
    LIR_CHECK(x.ndim() == 3, "slice_channels: input must be CxHxW");
    LIR_CHECK(0 <= c0 && c0 < c1 && c1 <= x.dim(0),
              "slice_channels: range [" << c0 << "," << c1 << ") invalid for " << x.dim(0)
                                        << " channels");
    const std::int64_t h = x.dim(1), w = x.dim(2), plane = h * w;
    Tensor<T> out = Tensor<T>::zeros({c1 - c0, h, w});
    std::memcpy(out.data(), x.data() + c0 * plane,
                sizeof(T) * static_cast<std::size_t>((c1 - c0) * plane));
    if (want_grad(tape, {&x})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, o = out;
        tape->record([xt, o, c0, plane]() mutable {
            if (!o.has_grad() || !xt.requires_grad()) return;
            kernels::table<T>().axpy(T(1), o.grad(), xt.grad_accum() + c0 * plane,
                                     static_cast<std::size_t>(o.numel()));
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul_channels(const Tensor<T>& x, const Tensor<T>& s, Tape<T>* tape) {
    LIR_CHECK(x.ndim() == 3, "mul_channels: input must be CxHxW");
    LIR_CHECK(s.numel() == x.dim(0), "mul_channels: gain length " << s.numel() << " != channels "
                                                                  << x.dim(0));
    const std::int64_t c = x.dim(0), plane = x.dim(1) * x.dim(2);
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    const auto& kt = kernels::table<T>();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        kt.scale(x.data() + ch * plane, s.data()[ch], out.data() + ch * plane,
                 static_cast<std::size_t>(plane));
    }
    if (want_grad(tape, {&x, &s})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, st = s, o = out;
        tape->record([xt, st, o, c, plane]() mutable {
            if (!o.has_grad()) return;
            const auto& kt = kernels::table<T>();
            if (xt.requires_grad()) {
                T* gx = xt.grad_accum();
                for (std::int64_t ch = 0; ch < c; ++ch) {
                    kt.axpy(st.data()[ch], o.grad() + ch * plane, gx + ch * plane,
                            static_cast<std::size_t>(plane));
                }
            }
            if (st.requires_grad()) {
                T* gs = st.grad_accum();
                for (std::int64_t ch = 0; ch < c; ++ch) {
                    gs[ch] += kt.dot(o.grad() + ch * plane, xt.data() + ch * plane,
                                     static_cast<std::size_t>(plane));
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul_patch_gains(const Tensor<T>& x, const Tensor<T>& gains, std::int64_t ph,
                          std::int64_t pw, Tape<T>* tape) {
    LIR_CHECK(x.ndim() == 3, "mul_patch_gains: input must be CxHxW");
    const std::int64_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
    LIR_CHECK(h % ph == 0 && w % pw == 0, "mul_patch_gains: patch grid does not divide "
                                              << h << "x" << w);
    const std::int64_t gh = h / ph, gw = w / pw;
    LIR_CHECK(gains.numel() == gh * gw, "mul_patch_gains: expected " << gh * gw << " gains, got "
                                                                     << gains.numel());
    Tensor<T> out = Tensor<T>::zeros(x.shape());
    const auto& kt = kernels::table<T>();
    for (std::int64_t ch = 0; ch < c; ++ch) {
        for (std::int64_t pr = 0; pr < gh; ++pr) {
            for (std::int64_t a = 0; a < ph; ++a) {
                const std::int64_t row = ch * h * w + (pr * ph + a) * w;
                for (std::int64_t pc = 0; pc < gw; ++pc) {
                    kt.scale(x.data() + row + pc * pw, gains.data()[pr * gw + pc],
                             out.data() + row + pc * pw, static_cast<std::size_t>(pw));
                }
            }
        }
    }
    if (want_grad(tape, {&x, &gains})) {
        out.set_requires_grad(true);
        Tensor<T> xt = x, gt = gains, o = out;
        tape->record([xt, gt, o, c, h, w, ph, pw, gh, gw]() mutable {
            if (!o.has_grad()) return;
            const auto& kt = kernels::table<T>();
            if (xt.requires_grad()) {
                T* gx = xt.grad_accum();
                for (std::int64_t ch = 0; ch < c; ++ch) {
                    for (std::int64_t pr = 0; pr < gh; ++pr) {
                        for (std::int64_t a = 0; a < ph; ++a) {
                            const std::int64_t row = ch * h * w + (pr * ph + a) * w;
                            for (std::int64_t pc = 0; pc < gw; ++pc) {
                                kt.axpy(gt.data()[pr * gw + pc], o.grad() + row + pc * pw,
                                        gx + row + pc * pw, static_cast<std::size_t>(pw));
                            }
                        }
                    }
                }
            }
            if (gt.requires_grad()) {
                T* gg = gt.grad_accum();
                for (std::int64_t ch = 0; ch < c; ++ch) {
                    for (std::int64_t pr = 0; pr < gh; ++pr) {
                        for (std::int64_t a = 0; a < ph; ++a) {
                            const std::int64_t row = ch * h * w + (pr * ph + a) * w;
                            for (std::int64_t pc = 0; pc < gw; ++pc) {
                                gg[pr * gw + pc] +=
                                    kt.dot(o.grad() + row + pc * pw, xt.data() + row + pc * pw,
                                           static_cast<std::size_t>(pw));
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target, Tape<T>* tape) {
    LIR_CHECK(pred.shape() == target.shape(), "l1_loss: shape mismatch "
                                                  << shape_str(pred.shape()) << " vs "
                                                  << shape_str(target.shape()));
    const std::size_t n = static_cast<std::size_t>(pred.numel());
    const T inv = T(1) / static_cast<T>(pred.numel());
    Tensor<T> out =
        Tensor<T>::scalar(kernels::table<T>().abs_diff_sum(pred.data(), target.data(), n) * inv);
    if (want_grad(tape, {&pred, &target})) {
        out.set_requires_grad(true);
        Tensor<T> pt = pred, tt = target, o = out;
        tape->record([pt, tt, o, inv]() mutable {
            if (!o.has_grad()) return;
            const T g = o.grad()[0] * inv;
            const std::int64_t n = pt.numel();
            const T* pd = pt.data();
            const T* td = tt.data();
            if (pt.requires_grad()) {
                T* gp = pt.grad_accum();
                for (std::int64_t i = 0; i < n; ++i) {
                    if (pd[i] > td[i]) gp[i] += g;
                    else if (pd[i] < td[i]) gp[i] -= g;
                }
            }
            if (tt.requires_grad()) {
                T* gt = tt.grad_accum();
                for (std::int64_t i = 0; i < n; ++i) {
                    if (pd[i] > td[i]) gt[i] -= g;
                    else if (pd[i] < td[i]) gt[i] += g;
                }
            }
        });
    }
    return out;
}

// --------------------------------------------------- explicit instantiation

#define LIR_INSTANTIATE_OPS(T)                                                                    \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*,           \
                                 const Conv2dOpts&, Tape<T>*);                                    \
    template Tensor<T> conv_transpose2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, \
                                           const ConvTranspose2dOpts&, Tape<T>*);                 \
    template Tensor<T> depthwise3x3<T>(const Tensor<T>&, const std::array<T, 9>&, Tape<T>*);     \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);                     \
    template Tensor<T> subtract<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);                \
    template Tensor<T> multiply<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);                \
    template Tensor<T> scale<T>(const Tensor<T>&, T, Tape<T>*);                                  \
    template Tensor<T> scale_by<T>(const Tensor<T>&, const Tensor<T>&, std::int64_t, Tape<T>*);  \
    template Tensor<T> relu<T>(const Tensor<T>&, Tape<T>*);                                      \
    template Tensor<T> sigmoid<T>(const Tensor<T>&, Tape<T>*);                                   \
    template Tensor<T> sum<T>(const Tensor<T>&, Tape<T>*);                                       \
    template Tensor<T> mean<T>(const Tensor<T>&, Tape<T>*);                                      \
    template Tensor<T> global_average_pool<T>(const Tensor<T>&, Tape<T>*);                       \
    template Tensor<T> reshape<T>(const Tensor<T>&, Shape, Tape<T>*);                            \
    template Tensor<T> patchify<T>(const Tensor<T>&, std::int64_t, std::int64_t, Tape<T>*);      \
    template Tensor<T> unpatchify<T>(const Tensor<T>&, std::int64_t, std::int64_t, std::int64_t, \
                                     std::int64_t, std::int64_t, Tape<T>*);                       \
    template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);                  \
    template Tensor<T> add_row_bias<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);            \
    template Tensor<T> slice_channels<T>(const Tensor<T>&, std::int64_t, std::int64_t, Tape<T>*);\
    template Tensor<T> mul_channels<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);            \
    template Tensor<T> mul_patch_gains<T>(const Tensor<T>&, const Tensor<T>&, std::int64_t,      \
                                          std::int64_t, Tape<T>*);                               \
    template Tensor<T> l1_loss<T>(const Tensor<T>&, const Tensor<T>&, Tape<T>*);

LIR_INSTANTIATE_OPS(float)
LIR_INSTANTIATE_OPS(double)

}  // namespace lir::ops
