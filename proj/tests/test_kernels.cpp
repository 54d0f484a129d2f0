#include "metabias/error.hpp"
#include "metabias/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace metabias::kernels;

namespace {

struct Data {
    std::vector<double> x, y, w;
};

Data make_data(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> norm(0.0, 3.0);
    std::uniform_real_distribution<double> unif(0.01, 10.0);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        d.x.push_back(norm(rng));
        d.y.push_back(norm(rng) + 1.0);
        d.w.push_back(unif(rng));
    }
    return d;
}

double rel(double a, double b) { return std::fabs(a - b) / std::max(1.0, std::fabs(b)); }

}  // namespace

TEST(Kernels, ScalarMatchesDirectSums) {
    const std::vector<double> x{1, 2, 3}, y{4, 5, 6}, w{0.5, 1, 2};
    const WeightedTotals t = scalar::weighted_totals(x, y, w);
    EXPECT_DOUBLE_EQ(t.sum_w, 3.5);
    EXPECT_DOUBLE_EQ(t.sum_wx, 0.5 + 2 + 6);
    EXPECT_DOUBLE_EQ(t.sum_wy, 2 + 5 + 12);
    EXPECT_DOUBLE_EQ(t.sum_ww, 0.25 + 1 + 4);
    const CenteredMoments m = scalar::centered_moments(x, y, w, 2.0, 5.0);
    EXPECT_DOUBLE_EQ(m.sxx, 0.5 + 0 + 2);
    EXPECT_DOUBLE_EQ(m.sxy, 0.5 + 0 + 2);
    EXPECT_DOUBLE_EQ(m.syy, 0.5 + 0 + 2);
}

TEST(Kernels, EmptyInput) {
    const std::vector<double> e;
    const WeightedTotals t = weighted_totals(e, e, e);
    EXPECT_EQ(t.sum_w, 0.0);
    EXPECT_EQ(t.sum_ww, 0.0);
}

TEST(Kernels, DispatchReportsBackend) {
    const Backend b = active_backend();
    EXPECT_TRUE(b == Backend::scalar || avx2_available());
    EXPECT_FALSE(backend_name(b).empty());
    set_backend(Backend::scalar);
    EXPECT_EQ(active_backend(), Backend::scalar);
    if (avx2_available()) {
        set_backend(Backend::avx2);
        EXPECT_EQ(active_backend(), Backend::avx2);
    } else {
        EXPECT_THROW(set_backend(Backend::avx2), metabias::Error);
    }
    set_backend(b);
}

#if defined(METABIAS_HAVE_AVX2)
TEST(Kernels, Avx2MatchesScalarOnAllLengths) {
    if (!avx2_available()) GTEST_SKIP() << "CPU lacks AVX2/FMA";
    std::mt19937_64 rng(42);
    for (std::size_t n = 0; n <= 67; ++n) {
        for (int rep = 0; rep < 5; ++rep) {
            const Data d = make_data(n, rng);
            const WeightedTotals s = scalar::weighted_totals(d.x, d.y, d.w);
            const WeightedTotals v = avx2::weighted_totals(d.x, d.y, d.w);
            EXPECT_LT(rel(v.sum_w, s.sum_w), 1e-13) << n;
            EXPECT_LT(rel(v.sum_wx, s.sum_wx), 1e-12) << n;
            EXPECT_LT(rel(v.sum_wy, s.sum_wy), 1e-12) << n;
            EXPECT_LT(rel(v.sum_ww, s.sum_ww), 1e-13) << n;
            const CenteredMoments ms = scalar::centered_moments(d.x, d.y, d.w, 0.3, -0.7);
            const CenteredMoments mv = avx2::centered_moments(d.x, d.y, d.w, 0.3, -0.7);
            EXPECT_LT(rel(mv.sxx, ms.sxx), 1e-12) << n;
            EXPECT_LT(rel(mv.sxy, ms.sxy), 1e-12) << n;
            EXPECT_LT(rel(mv.syy, ms.syy), 1e-12) << n;
        }
    }
}

TEST(Kernels, Avx2LargeInput) {
    if (!avx2_available()) GTEST_SKIP() << "CPU lacks AVX2/FMA";
    std::mt19937_64 rng(7);
    const Data d = make_data(100003, rng);
    const WeightedTotals s = scalar::weighted_totals(d.x, d.y, d.w);
    const WeightedTotals v = avx2::weighted_totals(d.x, d.y, d.w);
    EXPECT_LT(rel(v.sum_wx, s.sum_wx), 1e-10);
    EXPECT_LT(rel(v.sum_ww, s.sum_ww), 1e-12);
}
#endif
