#include "metabias/kernels.hpp"

#include <immintrin.h>

#include <cstddef>

namespace metabias::kernels::avx2 {

namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

WeightedTotals weighted_totals(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    const std::size_t n = w.size();
    __m256d sw = _mm256_setzero_pd();
    __m256d swx = _mm256_setzero_pd();
    __m256d swy = _mm256_setzero_pd();
    __m256d sww = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wv = _mm256_loadu_pd(w.data() + i);
        sw = _mm256_add_pd(sw, wv);
        swx = _mm256_fmadd_pd(wv, _mm256_loadu_pd(x.data() + i), swx);
        swy = _mm256_fmadd_pd(wv, _mm256_loadu_pd(y.data() + i), swy);
        sww = _mm256_fmadd_pd(wv, wv, sww);
    }
    WeightedTotals t{hsum(sw), hsum(swx), hsum(swy), hsum(sww)};
    for (; i < n; ++i) {
        t.sum_w += w[i];
        t.sum_wx += w[i] * x[i];
        t.sum_wy += w[i] * y[i];
        t.sum_ww += w[i] * w[i];
    }
    return t;
}

CenteredMoments centered_moments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                 double xbar, double ybar) {
    const std::size_t n = w.size();
    const __m256d xb = _mm256_set1_pd(xbar);
    const __m256d yb = _mm256_set1_pd(ybar);
    __m256d sxx = _mm256_setzero_pd();
    __m256d sxy = _mm256_setzero_pd();
    __m256d syy = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d wv = _mm256_loadu_pd(w.data() + i);
        const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(x.data() + i), xb);
        const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(y.data() + i), yb);
        const __m256d wdx = _mm256_mul_pd(wv, dx);
        sxx = _mm256_fmadd_pd(wdx, dx, sxx);
        sxy = _mm256_fmadd_pd(wdx, dy, sxy);
        syy = _mm256_fmadd_pd(_mm256_mul_pd(wv, dy), dy, syy);
    }
    CenteredMoments m{hsum(sxx), hsum(sxy), hsum(syy)};
    for (; i < n; ++i) {
        const double dx = x[i] - xbar;
        const double dy = y[i] - ybar;
        m.sxx += w[i] * dx * dx;
        m.sxy += w[i] * dx * dy;
        m.syy += w[i] * dy * dy;
    }
    return m;
}

}  // namespace metabias::kernels::avx2
