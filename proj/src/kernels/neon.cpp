#include "lir/kernels/kernels.hpp"

// NEON variants for aarch64. float uses 4-lane f32 vectors, double 2-lane.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace lir::kernels {
namespace {

void add_f(const float* a, const float* b, float* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_f(const float* a, const float* b, float* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_f(const float* a, const float* b, float* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale_f(const float* x, float c, float* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmulq_n_f32(vld1q_f32(x + i), c));
    for (; i < n; ++i) dst[i] = c * x[i];
}

void axpy_f(float c, const float* x, float* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(dst + i, vfmaq_n_f32(vld1q_f32(dst + i), vld1q_f32(x + i), c));
    }
    for (; i < n; ++i) dst[i] += c * x[i];
}

void madd_f(const float* a, const float* b, float* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        vst1q_f32(dst + i, vfmaq_f32(vld1q_f32(dst + i), vld1q_f32(a + i), vld1q_f32(b + i)));
    }
    for (; i < n; ++i) dst[i] += a[i] * b[i];
}

float dot_f(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

float sum_f(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

void relu_f(const float* x, float* dst, std::size_t n) {
    const float32x4_t z = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(dst + i, vmaxq_f32(z, vld1q_f32(x + i)));
    for (; i < n; ++i) dst[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_bwd_f(const float* x, const float* g, float* dst, std::size_t n) {
    const float32x4_t z = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const uint32x4_t mask = vcgtq_f32(vld1q_f32(x + i), z);
        const float32x4_t gg =
            vreinterpretq_f32_u32(vandq_u32(mask, vreinterpretq_u32_f32(vld1q_f32(g + i))));
        vst1q_f32(dst + i, vaddq_f32(vld1q_f32(dst + i), gg));
    }
    for (; i < n; ++i) {
        if (x[i] > 0.0f) dst[i] += g[i];
    }
}

float sqr_diff_sum_f(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t d = vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i));
        acc = vfmaq_f32(acc, d, d);
    }
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) {
        const float d = a[i] - b[i];
        r += d * d;
    }
    return r;
}

float abs_diff_sum_f(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = vaddq_f32(acc, vabdq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    }
    float r = vaddvq_f32(acc);
    for (; i < n; ++i) r += std::abs(a[i] - b[i]);
    return r;
}

void add_d(const double* a, const double* b, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) dst[i] = a[i] + b[i];
}

void sub_d(const double* a, const double* b, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) dst[i] = a[i] - b[i];
}

void mul_d(const double* a, const double* b, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) dst[i] = a[i] * b[i];
}

void scale_d(const double* x, double c, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vmulq_n_f64(vld1q_f64(x + i), c));
    for (; i < n; ++i) dst[i] = c * x[i];
}

void axpy_d(double c, const double* x, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(dst + i, vfmaq_n_f64(vld1q_f64(dst + i), vld1q_f64(x + i), c));
    }
    for (; i < n; ++i) dst[i] += c * x[i];
}

void madd_d(const double* a, const double* b, double* dst, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(dst + i, vfmaq_f64(vld1q_f64(dst + i), vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    for (; i < n; ++i) dst[i] += a[i] * b[i];
}

double dot_d(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += a[i] * b[i];
    return r;
}

double sum_d(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += x[i];
    return r;
}

void relu_d(const double* x, double* dst, std::size_t n) {
    const float64x2_t z = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(dst + i, vmaxq_f64(z, vld1q_f64(x + i)));
    for (; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_bwd_d(const double* x, const double* g, double* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > 0.0) dst[i] += g[i];
    }
}

double sqr_diff_sum_d(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        r += d * d;
    }
    return r;
}

double abs_diff_sum_d(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vaddq_f64(acc, vabdq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    }
    double r = vaddvq_f64(acc);
    for (; i < n; ++i) r += std::abs(a[i] - b[i]);
    return r;
}

}  // namespace

const Table<float>& neon_f32() {
    static const Table<float> t = {
        add_f,  sub_f,      mul_f,          scale_f,        axpy_f, madd_f,
        dot_f,  sum_f,      relu_f,         relu_bwd_f,     sqr_diff_sum_f,
        abs_diff_sum_f,
    };
    return t;
}

const Table<double>& neon_f64() {
    static const Table<double> t = {
        add_d,  sub_d,      mul_d,          scale_d,        axpy_d, madd_d,
        dot_d,  sum_d,      relu_d,         relu_bwd_d,     sqr_diff_sum_d,
        abs_diff_sum_d,
    };
    return t;
}

}  // namespace lir::kernels

#endif  // aarch64
