#include "csc/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace csc::kernels {

namespace {

constexpr KernelTable kScalar{Backend::scalar, scalar::dot,    scalar::sum,    scalar::abs_sum,
                              scalar::gemv,    scalar::gemv_t, scalar::gram};

#ifdef CSC_HAVE_AVX2
constexpr KernelTable kAvx2{Backend::avx2, avx2::dot,    avx2::sum,   avx2::abs_sum,
                            avx2::gemv,    avx2::gemv_t, avx2::gram};
#endif

const KernelTable& select() noexcept {
    if (const char* env = std::getenv("CSC_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
        return kScalar;
    }
#ifdef CSC_HAVE_AVX2
    if (avx2_supported()) return kAvx2;
#endif
    return kScalar;
}

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

bool avx2_supported() noexcept {
#if defined(CSC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok;
#else
    return false;
#endif
}

const KernelTable& avx2_table() {
#ifdef CSC_HAVE_AVX2
    if (avx2_supported()) return kAvx2;
#endif
    throw std::runtime_error("AVX2 kernels are not available on this build or CPU");
}

const KernelTable& active() noexcept {
    static const KernelTable& table = select();
    return table;
}

std::string_view backend_name(Backend b) noexcept {
    return b == Backend::avx2 ? "avx2" : "scalar";
}

}  // namespace csc::kernels
