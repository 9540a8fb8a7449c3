#include "lir/kernels/kernels.hpp"

#include <cmath>

namespace lir::kernels {
namespace {

template <typename T>
void add_ref(const T* a, const T* b, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] + b[i];
}

template <typename T>
void sub_ref(const T* a, const T* b, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] - b[i];
}

template <typename T>
void mul_ref(const T* a, const T* b, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = a[i] * b[i];
}

template <typename T>
void scale_ref(const T* x, T c, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = c * x[i];
}

template <typename T>
void axpy_ref(T c, const T* x, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += c * x[i];
}

template <typename T>
void madd_ref(const T* a, const T* b, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a[i] * b[i];
}

template <typename T>
T dot_ref(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

template <typename T>
T sum_ref(const T* x, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

template <typename T>
void relu_ref(const T* x, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_bwd_ref(const T* x, const T* g, T* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (x[i] > T(0)) dst[i] += g[i];
    }
}

template <typename T>
T sqr_diff_sum_ref(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const T d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

template <typename T>
T abs_diff_sum_ref(const T* a, const T* b, std::size_t n) {
    T acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

template <typename T>
constexpr Table<T> make_scalar_table() {
    return Table<T>{
        add_ref<T>,  sub_ref<T>,      mul_ref<T>,          scale_ref<T>,
        axpy_ref<T>, madd_ref<T>,     dot_ref<T>,          sum_ref<T>,
        relu_ref<T>, relu_bwd_ref<T>, sqr_diff_sum_ref<T>, abs_diff_sum_ref<T>,
    };
}

}  // namespace

const Table<float>& scalar_f32() {
    static const Table<float> t = make_scalar_table<float>();
    return t;
}

const Table<double>& scalar_f64() {
    static const Table<double> t = make_scalar_table<double>();
    return t;
}

}  // namespace lir::kernels
