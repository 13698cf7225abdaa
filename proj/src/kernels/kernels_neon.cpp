// NEON kernels for aarch64. float64x2_t lanes, same contracts as scalar.

#if defined(__aarch64__)

#include <arm_neon.h>

#include "oat/kernels.hpp"

namespace oat::kernels::neon {

namespace {

inline double dot_impl(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    if (i + 2 <= n) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        i += 2;
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

inline double sqdist_impl(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return dot_impl(a, b, n); }

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    return sqdist_impl(a, b, n);
}

void dot_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
              std::size_t dim, double* out) {
    for (std::size_t i = 0; i < n_ids; ++i) {
        out[i] = dot_impl(rows + static_cast<std::size_t>(ids[i]) * dim, v, dim);
    }
}

void sqdist_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                 std::size_t dim, double* out) {
    for (std::size_t i = 0; i < n_ids; ++i) {
        out[i] = sqdist_impl(rows + static_cast<std::size_t>(ids[i]) * dim, v, dim);
    }
}

}  // namespace oat::kernels::neon

#endif  // aarch64
