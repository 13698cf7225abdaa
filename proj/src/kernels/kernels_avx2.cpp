// AVX2+FMA kernels. This translation unit is compiled with -mavx2 -mfma on
// x86-64 only; dispatch.cpp checks cpu support before routing here.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "oat/kernels.hpp"

namespace oat::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

inline double dot_impl(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

inline double sqdist_impl(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) { return dot_impl(a, b, n); }

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        _mm256_storeu_pd(y + i, vy);
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

}  // namespace oat::kernels::avx2

#endif  // x86-64
