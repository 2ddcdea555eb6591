// Compiled with -mavx2 -mfma. Nothing in this file may run before
// avx2_supported() has been checked.

#include "csc/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace csc::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

double dot(const double* a, const double* b, std::size_t n) {
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
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double sum(const double* a, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i];
    return s;
}

double abs_sum(const double* a, std::size_t n) {
    const __m256d sign_mask = _mm256_set1_pd(-0.0);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(a + i)));
    double s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i]);
    return s;
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t i = 0; i < rows; ++i) y[i] = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
        const double* col = a + j * rows;
        const __m256d xj = _mm256_set1_pd(x[j]);
        std::size_t i = 0;
        for (; i + 4 <= rows; i += 4) {
            _mm256_storeu_pd(y + i, _mm256_fmadd_pd(_mm256_loadu_pd(col + i), xj, _mm256_loadu_pd(y + i)));
        }
        for (; i < rows; ++i) y[i] += col[i] * x[j];
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

}  // namespace csc::kernels::avx2
