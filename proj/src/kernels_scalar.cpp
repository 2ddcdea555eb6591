#include "csc/kernels.hpp"

#include <cmath>

namespace csc::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
}

double abs_sum(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
    return s;
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const double* col = a + j * rows;
        const double xj = x[j];
        for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * xj;
    }
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t j = 0; j < cols; ++j) y[j] = dot(a + j * rows, x, rows);
}

void gram(const double* a, std::size_t rows, std::size_t cols, double* g) {
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t k = 0; k <= j; ++k) {
            const double v = dot(a + j * rows, a + k * rows, rows);
            g[j * cols + k] = v;
            g[k * cols + j] = v;
        }
    }
}

}  // namespace csc::kernels::scalar
