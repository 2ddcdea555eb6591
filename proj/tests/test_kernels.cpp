#include "csc/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace csc::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    for (auto& x : v) x = z(rng);
    return v;
}

bool close(double a, double b, double scale) { return std::fabs(a - b) <= 1e-12 * (1.0 + scale); }

}  // namespace

TEST_CASE("scalar kernels match direct loops") {
    const std::vector<double> a{1.0, -2.0, 3.0};
    const std::vector<double> b{4.0, 5.0, -6.0};
    const auto& t = scalar_table();
    CHECK(t.dot(a.data(), b.data(), 3) == doctest::Approx(4.0 - 10.0 - 18.0));
    CHECK(t.sum(a.data(), 3) == doctest::Approx(2.0));
    CHECK(t.abs_sum(a.data(), 3) == doctest::Approx(6.0));

    // A = [[1, 3], [2, 4]] column-major.
    const std::vector<double> m{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> x{1.0, -1.0};
    std::vector<double> y(2);
    t.gemv(m.data(), 2, 2, x.data(), y.data());
    CHECK(y[0] == doctest::Approx(-2.0));
    CHECK(y[1] == doctest::Approx(-2.0));
    t.gemv_t(m.data(), 2, 2, x.data(), y.data());
    CHECK(y[0] == doctest::Approx(-1.0));
    CHECK(y[1] == doctest::Approx(-1.0));
    std::vector<double> g(4);
    t.gram(m.data(), 2, 2, g.data());
    CHECK(g[0] == doctest::Approx(5.0));
    CHECK(g[1] == doctest::Approx(11.0));
    CHECK(g[2] == doctest::Approx(11.0));
    CHECK(g[3] == doctest::Approx(25.0));
}

TEST_CASE("empty inputs") {
    const auto& t = scalar_table();
    CHECK(t.dot(nullptr, nullptr, 0) == 0.0);
    CHECK(t.sum(nullptr, 0) == 0.0);
    CHECK(t.abs_sum(nullptr, 0) == 0.0);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
    if (!avx2_supported()) {
        MESSAGE("AVX2 not available; equivalence not exercised");
        return;
    }
    const auto& s = scalar_table();
    const auto& v = avx2_table();
    CHECK(v.backend == Backend::avx2);
    std::mt19937_64 rng(7);
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 31u, 64u, 67u, 200u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) scale += std::fabs(a[i] * b[i]);
        CHECK(close(s.dot(a.data(), b.data(), n), v.dot(a.data(), b.data(), n), scale));
        CHECK(close(s.sum(a.data(), n), v.sum(a.data(), n), s.abs_sum(a.data(), n)));
        CHECK(close(s.abs_sum(a.data(), n), v.abs_sum(a.data(), n), s.abs_sum(a.data(), n)));
    }
    for (std::size_t rows : {1u, 3u, 4u, 9u, 21u}) {
        for (std::size_t cols : {1u, 2u, 5u, 8u, 13u}) {
            const auto m = random_vec(rows * cols, rng);
            const auto x = random_vec(cols, rng);
            const auto xt = random_vec(rows, rng);
            std::vector<double> y1(rows), y2(rows), z1(cols), z2(cols), g1(cols * cols), g2(cols * cols);
            s.gemv(m.data(), rows, cols, x.data(), y1.data());
            v.gemv(m.data(), rows, cols, x.data(), y2.data());
            for (std::size_t i = 0; i < rows; ++i) CHECK(close(y1[i], y2[i], 10.0 * cols));
            s.gemv_t(m.data(), rows, cols, xt.data(), z1.data());
            v.gemv_t(m.data(), rows, cols, xt.data(), z2.data());
            for (std::size_t i = 0; i < cols; ++i) CHECK(close(z1[i], z2[i], 10.0 * rows));
            s.gram(m.data(), rows, cols, g1.data());
            v.gram(m.data(), rows, cols, g2.data());
            for (std::size_t i = 0; i < cols * cols; ++i) CHECK(close(g1[i], g2[i], 10.0 * rows));
            for (std::size_t i = 0; i < cols; ++i) {
                for (std::size_t j = 0; j < cols; ++j) CHECK(g2[i * cols + j] == g2[j * cols + i]);
            }
        }
    }
}

TEST_CASE("dispatch reports a backend") {
    const auto name = backend_name(active().backend);
    CHECK((name == "scalar" || name == "avx2"));
}
