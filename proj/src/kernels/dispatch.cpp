#include "lir/kernels/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace lir::kernels {
namespace {

Backend detect_backend() {
    if (const char* env = std::getenv("LIR_KERNEL_BACKEND")) {
        const std::string want(env);
        if (want == "scalar") return Backend::scalar;
        if (want == "avx2" && backend_available(Backend::avx2)) return Backend::avx2;
        if (want == "neon" && backend_available(Backend::neon)) return Backend::neon;
        // Unknown or unavailable request falls through to auto detection.
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
        return Backend::avx2;
    }
#endif
#if defined(__aarch64__)
    return Backend::neon;
#endif
    return Backend::scalar;
}

// Resolved once; force_backend overrides for tests.
Backend g_backend = detect_backend();

}  // namespace

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

bool backend_available(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Backend active_backend() { return g_backend; }

void force_backend(std::optional<Backend> b) {
    if (!b.has_value()) {
        g_backend = detect_backend();
        return;
    }
    if (!backend_available(*b)) {
        throw std::runtime_error(std::string("kernel backend not available: ") + backend_name(*b));
    }
    g_backend = *b;
}

const Table<float>& f32() {
    switch (g_backend) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: return avx2_f32();
#endif
#if defined(__aarch64__)
        case Backend::neon: return neon_f32();
#endif
        default: return scalar_f32();
    }
}

const Table<double>& f64() {
    switch (g_backend) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: return avx2_f64();
#endif
#if defined(__aarch64__)
        case Backend::neon: return neon_f64();
#endif
        default: return scalar_f64();
    }
}

}  // namespace lir::kernels
