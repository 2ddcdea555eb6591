#pragma once

// Dense double-precision inner loops used by the solvers and the permutation
// engine. Every kernel has a scalar reference implementation; an AVX2/FMA
// variant is selected at runtime when the CPU supports it. Call sites go
// through the dispatching free functions at the bottom of this header.
//
// Matrices are column-major with leading dimension == rows.

#include <cstddef>
#include <span>
#include <string_view>

namespace csc::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
    Backend backend;
    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* a, std::size_t n);
    double (*abs_sum)(const double* a, std::size_t n);
    // y = A x, A is rows x cols.
    void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
    // y = A' x, A is rows x cols.
    void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
    // g = A' A, g is cols x cols, both triangles filled.
    void (*gram)(const double* a, std::size_t rows, std::size_t cols, double* g);
};

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double abs_sum(const double* a, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gram(const double* a, std::size_t rows, std::size_t cols, double* g);
}  // namespace scalar

namespace avx2 {
// Linked only when built with CSC_ENABLE_AVX2; never call without checking
// avx2_supported().
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* a, std::size_t n);
double abs_sum(const double* a, std::size_t n);
void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gram(const double* a, std::size_t rows, std::size_t cols, double* g);
}  // namespace avx2

[[nodiscard]] const KernelTable& scalar_table() noexcept;

// True when the AVX2 variants were compiled in and the running CPU has AVX2+FMA.
[[nodiscard]] bool avx2_supported() noexcept;

// Requires avx2_supported().
[[nodiscard]] const KernelTable& avx2_table();

// The table picked at first use: AVX2 when supported, unless the environment
// variable CSC_SIMD is set to "scalar".
[[nodiscard]] const KernelTable& active() noexcept;

[[nodiscard]] std::string_view backend_name(Backend b) noexcept;

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active().dot(a.data(), b.data(), a.size());
}
inline double sum(std::span<const double> a) { return active().sum(a.data(), a.size()); }
inline double abs_sum(std::span<const double> a) { return active().abs_sum(a.data(), a.size()); }
inline void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    active().gemv(a, rows, cols, x, y);
}
inline void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
    active().gemv_t(a, rows, cols, x, y);
}
inline void gram(const double* a, std::size_t rows, std::size_t cols, double* g) {
    active().gram(a, rows, cols, g);
}

}  // namespace csc::kernels
