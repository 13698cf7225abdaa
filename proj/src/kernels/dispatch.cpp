#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "oat/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
namespace oat::kernels::avx2 {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double squared_distance(const double*, const double*, std::size_t);
void dot_rows(const double*, const int*, std::size_t, const double*, std::size_t, double*);
void sqdist_rows(const double*, const int*, std::size_t, const double*, std::size_t, double*);
}  // namespace oat::kernels::avx2
#endif

#if defined(__aarch64__)
namespace oat::kernels::neon {
double dot(const double*, const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
double squared_distance(const double*, const double*, std::size_t);
void dot_rows(const double*, const int*, std::size_t, const double*, std::size_t, double*);
void sqdist_rows(const double*, const int*, std::size_t, const double*, std::size_t, double*);
}  // namespace oat::kernels::neon
#endif

namespace oat::kernels {

namespace {

constexpr Ops kScalarOps{scalar::dot, scalar::axpy, scalar::squared_distance, scalar::dot_rows,
                         scalar::sqdist_rows};

#if defined(__x86_64__) || defined(_M_X64)
constexpr Ops kAvx2Ops{avx2::dot, avx2::axpy, avx2::squared_distance, avx2::dot_rows,
                       avx2::sqdist_rows};
#endif

#if defined(__aarch64__)
constexpr Ops kNeonOps{neon::dot, neon::axpy, neon::squared_distance, neon::dot_rows,
                       neon::sqdist_rows};
#endif

Backend detect_backend() {
    if (const char* env = std::getenv("OAT_KERNEL")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && backend_available(Backend::avx2))
            return Backend::avx2;
        if (std::strcmp(env, "neon") == 0 && backend_available(Backend::neon))
            return Backend::neon;
        // Unknown or unavailable request falls through to auto-detect.
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (backend_available(Backend::avx2)) return Backend::avx2;
#endif
#if defined(__aarch64__)
    return Backend::neon;
#endif
    return Backend::scalar;
}

std::atomic<Backend>& current_backend() {
    static std::atomic<Backend> backend{detect_backend()};
    return backend;
}

}  // namespace

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

const Ops& ops_for(Backend b) {
    switch (b) {
        case Backend::scalar:
            return kScalarOps;
        case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            if (backend_available(Backend::avx2)) return kAvx2Ops;
#endif
            break;
        case Backend::neon:
#if defined(__aarch64__)
            return kNeonOps;
#else
            break;
#endif
    }
    throw std::invalid_argument("kernel backend not available on this CPU");
}

const Ops& active() { return ops_for(current_backend().load(std::memory_order_relaxed)); }

Backend active_backend() { return current_backend().load(std::memory_order_relaxed); }

std::string_view backend_name(Backend b) {
    switch (b) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
        case Backend::neon:
            return "neon";
    }
    return "unknown";
}

std::string_view active_backend_name() { return backend_name(active_backend()); }

bool force_backend(Backend b) {
    if (!backend_available(b)) return false;
    current_backend().store(b, std::memory_order_relaxed);
    return true;
}

}  // namespace oat::kernels
