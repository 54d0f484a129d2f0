#include "metabias/error.hpp"
#include "metabias/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string_view>

namespace metabias::kernels {

namespace {

Backend detect() noexcept {
    if (const char* env = std::getenv("METABIAS_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
        return Backend::scalar;
    }
    return avx2_available() ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() noexcept {
    static std::atomic<Backend> backend{detect()};
    return backend;
}

}  // namespace

std::string_view backend_name(Backend b) noexcept { return b == Backend::avx2 ? "avx2" : "scalar"; }

bool avx2_available() noexcept {
#if defined(METABIAS_HAVE_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_available()) {
        throw Error(ErrorCode::DomainError, "AVX2 kernels are not available on this machine or build");
    }
    current().store(b, std::memory_order_relaxed);
}

WeightedTotals weighted_totals(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
#if defined(METABIAS_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return avx2::weighted_totals(x, y, w);
#endif
    return scalar::weighted_totals(x, y, w);
}

CenteredMoments centered_moments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                 double xbar, double ybar) {
#if defined(METABIAS_HAVE_AVX2)
    if (active_backend() == Backend::avx2) return avx2::centered_moments(x, y, w, xbar, ybar);
#endif
    return scalar::centered_moments(x, y, w, xbar, ybar);
}

}  // namespace metabias::kernels
