#pragma once

#include <span>
#include <string_view>

// Weighted reductions behind pooling and small regressions. Each kernel has a
// scalar reference and, on x86-64, an AVX2/FMA variant; the dispatcher picks
// one at first use from CPUID. Set METABIAS_SIMD=scalar to force the
// reference path.

namespace metabias::kernels {

struct WeightedTotals {
    double sum_w = 0.0;
    double sum_wx = 0.0;
    double sum_wy = 0.0;
    double sum_ww = 0.0;
};

/// Centered second moments: sum w (x-xbar)^2, sum w (x-xbar)(y-ybar), sum w (y-ybar)^2.
struct CenteredMoments {
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
};

enum class Backend { scalar, avx2 };

std::string_view backend_name(Backend b) noexcept;
bool avx2_available() noexcept;
Backend active_backend() noexcept;
/// Throws DomainError when asking for a backend the CPU or build lacks.
void set_backend(Backend b);

WeightedTotals weighted_totals(std::span<const double> x, std::span<const double> y, std::span<const double> w);
CenteredMoments centered_moments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                 double xbar, double ybar);

namespace scalar {
WeightedTotals weighted_totals(std::span<const double> x, std::span<const double> y, std::span<const double> w);
CenteredMoments centered_moments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                 double xbar, double ybar);
}  // namespace scalar

#if defined(METABIAS_HAVE_AVX2)
namespace avx2 {
WeightedTotals weighted_totals(std::span<const double> x, std::span<const double> y, std::span<const double> w);
CenteredMoments centered_moments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                 double xbar, double ybar);
}  // namespace avx2
#endif

}  // namespace metabias::kernels
