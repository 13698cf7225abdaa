#include "oat/kernels.hpp"

namespace oat::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void dot_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
              std::size_t dim, double* out) {
    for (std::size_t i = 0; i < n_ids; ++i) {
        out[i] = dot(rows + static_cast<std::size_t>(ids[i]) * dim, v, dim);
    }
}

void sqdist_rows(const double* rows, const int* ids, std::size_t n_ids, const double* v,
                 std::size_t dim, double* out) {
    for (std::size_t i = 0; i < n_ids; ++i) {
        out[i] = squared_distance(rows + static_cast<std::size_t>(ids[i]) * dim, v, dim);
    }
}

}  // namespace oat::kernels::scalar
