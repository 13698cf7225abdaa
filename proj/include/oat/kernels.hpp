#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace oat::kernels {

// Dense double-precision inner loops used by the diagnosis model: dot
// products, gradient accumulation and pool-wide row scans. Scalar reference
// kernels are always available; AVX2 (x86-64) and NEON (aarch64) variants are
// selected at runtime and equivalence-tested against the scalar ones.
//
// Vector variants accumulate in a different order than the scalar loop, so
// results may differ in the last ulps. A single process always runs one
// backend, picked once at startup.

enum class Backend { scalar, avx2, neon };

struct Ops {
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    // out[i] = dot(rows + ids[i]*dim, v); rows is a row-major matrix.
    void (*dot_rows)(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                     std::size_t dim, double* out);
    // out[i] = squared_distance(rows + ids[i]*dim, v)
    void (*sqdist_rows)(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                        std::size_t dim, double* out);
};

// Active backend. Chosen on first use: OAT_KERNEL env var (scalar|avx2|neon)
// if set, otherwise the widest supported one.
const Ops& active();
Backend active_backend();
std::string_view backend_name(Backend b);
std::string_view active_backend_name();

// For tests and the CLI. Returns false (and leaves the backend unchanged)
// when the requested backend is not available on this CPU.
bool force_backend(Backend b);

const Ops& ops_for(Backend b);  // throws std::invalid_argument if unavailable
bool backend_available(Backend b);

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    active().axpy(a, x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    return active().squared_distance(a.data(), b.data(), a.size());
}

inline double norm_sq(std::span<const double> a) {
    return active().dot(a.data(), a.data(), a.size());
}

inline void dot_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                     std::size_t dim, double* out) {
    active().dot_rows(rows, ids, n_ids, v, dim, out);
}

inline void sqdist_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                        std::size_t dim, double* out) {
    active().sqdist_rows(rows, ids, n_ids, v, dim, out);
}

// Reference kernels, exposed so tests can compare any backend against them.
namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double a, const double* x, double* y, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void dot_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
              std::size_t dim, double* out);
void sqdist_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                 std::size_t dim, double* out);
}  // namespace scalar

}  // namespace oat::kernels
