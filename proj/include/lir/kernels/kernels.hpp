#pragma once

#include <cstddef>
#include <optional>
#include <string>

// Contiguous-array arithmetic kernels behind the tensor ops. Every entry
// point has a scalar reference implementation plus SIMD variants (AVX2 on
// x86-64, NEON on aarch64) selected once at runtime. The scalar table is the
// semantic reference; SIMD tables are checked against it in the kernel
// equivalence tests.

namespace lir::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);

template <typename T>
struct Table {
    // dst = a + b, dst = a - b, dst = a * b
    void (*add)(const T* a, const T* b, T* dst, std::size_t n);
    void (*sub)(const T* a, const T* b, T* dst, std::size_t n);
    void (*mul)(const T* a, const T* b, T* dst, std::size_t n);
    // dst = c * x
    void (*scale)(const T* x, T c, T* dst, std::size_t n);
    // dst += c * x
    void (*axpy)(T c, const T* x, T* dst, std::size_t n);
    // dst += a * b (elementwise)
    void (*madd)(const T* a, const T* b, T* dst, std::size_t n);
    T (*dot)(const T* a, const T* b, std::size_t n);
    T (*sum)(const T* x, std::size_t n);
    // dst = max(x, 0)
    void (*relu)(const T* x, T* dst, std::size_t n);
    // dst += (x > 0) ? g : 0
    void (*relu_bwd)(const T* x, const T* g, T* dst, std::size_t n);
    T (*sqr_diff_sum)(const T* a, const T* b, std::size_t n);
    T (*abs_diff_sum)(const T* a, const T* b, std::size_t n);
};

// Active table for the dispatched backend. Resolved on first use from CPU
// features, overridable with LIR_KERNEL_BACKEND=scalar|avx2|neon.
const Table<float>& f32();
const Table<double>& f64();

template <typename T>
const Table<T>& table() {
    if constexpr (sizeof(T) == sizeof(float)) {
        return reinterpret_cast<const Table<T>&>(f32());
    } else {
        return reinterpret_cast<const Table<T>&>(f64());
    }
}

Backend active_backend();

// Test hook: pin the backend (nullopt restores automatic dispatch).
// Throws if the requested backend is not usable on this machine.
void force_backend(std::optional<Backend> b);

bool backend_available(Backend b);

// Reference tables, always available regardless of dispatch.
const Table<float>& scalar_f32();
const Table<double>& scalar_f64();

#if defined(__x86_64__) || defined(_M_X64)
const Table<float>& avx2_f32();
const Table<double>& avx2_f64();
#endif
#if defined(__aarch64__)
const Table<float>& neon_f32();
const Table<double>& neon_f64();
#endif

}  // namespace lir::kernels
