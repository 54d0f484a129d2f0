#include "metabias/error.hpp"
#include "metabias/numerics.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace metabias;
using namespace metabias::numerics;

TEST(NormCdf, SymmetryPoint) { EXPECT_DOUBLE_EQ(norm_cdf(0.0), 0.5); }

TEST(NormCdf, Saturation) { EXPECT_NEAR(norm_cdf(40.0), 1.0, 1e-15); }

TEST(NormCdf, MatchesErfSeriesOracle) {
    EXPECT_NEAR(norm_cdf(1.959963985), oracle::norm_cdf(1.959963985), 1e-13);
    EXPECT_NEAR(norm_cdf(1.959963985), 0.975, 1e-9);
    for (double x = -5.0; x <= 5.0; x += 0.25) EXPECT_NEAR(norm_cdf(x), oracle::norm_cdf(x), 1e-13) << x;
}

TEST(NormCdf, LogTailsStayFinite) {
    EXPECT_TRUE(std::isfinite(log_norm_cdf(-60.0)));
    EXPECT_NEAR(log_norm_cdf(-5.0), std::log(norm_cdf(-5.0)), 1e-12);
    EXPECT_NEAR(log_norm_sf(5.0), std::log(norm_sf(5.0)), 1e-12);
    EXPECT_LT(log_norm_cdf(-60.0), log_norm_cdf(-50.0));
}

TEST(NormQuantile, InvertsCdf) {
    EXPECT_NEAR(norm_quantile(0.975), kZ975, 1e-12);
    for (double p : {1e-10, 1e-4, 0.01, 0.3, 0.5, 0.77, 0.999}) EXPECT_NEAR(norm_cdf(norm_quantile(p)), p, 1e-12 * std::max(1.0, p / 1e-4));
    EXPECT_THROW(norm_quantile(0.0), Error);
    EXPECT_THROW(norm_quantile(1.5), Error);
}

TEST(TQuantile, MedianIsZero) {
    for (double df : {1.0, 2.5, 10.0, 1e4}) EXPECT_NEAR(t_quantile(0.5, df), 0.0, 1e-14);
}

TEST(TQuantile, MatchesQuadratureOracle) {
    const double oracle_value = oracle::t_quantile_quadrature(0.975, 28.0);
    EXPECT_NEAR(oracle_value, 2.048407, 5e-7);
    EXPECT_NEAR(t_quantile(0.975, 28.0), oracle_value, 1e-9);
    for (double df : {1.0, 3.0, 7.5, 40.0}) {
        for (double p : {0.6, 0.9, 0.99}) {
            EXPECT_NEAR(t_quantile(p, df), oracle::t_quantile_quadrature(p, df), 1e-7) << p << " " << df;
        }
    }
}

TEST(TQuantile, NormalLimit) { EXPECT_NEAR(t_quantile(0.975, 1e6), 1.959964, 1e-4); }

TEST(TCdf, MatchesQuadratureOracle) {
    for (double df : {1.0, 4.0, 17.3}) {
        for (double t : {-3.0, -0.5, 0.8, 2.2}) {
            const double ref = t < 0 ? 1.0 - oracle::t_cdf_quadrature(-t, df) : oracle::t_cdf_quadrature(t, df);
            EXPECT_NEAR(t_cdf(t, df), ref, 1e-10);
        }
    }
    EXPECT_NEAR(t_two_sided_p(0.0, 5), 1.0, 1e-15);
}

TEST(GammaQuantile, ExponentialClosedForm) {
    EXPECT_NEAR(gamma_quantile(1.0 - std::exp(-1.0), 1.0, 1.0), 1.0, 1e-12);
}

TEST(GammaQuantile, MatchesSeriesOracle) {
    const double ref = oracle::bisect([](double x) { return oracle::gamma_p_series(10.0, x) - 0.5; }, 1.0, 30.0);
    EXPECT_NEAR(ref, 9.66871, 5e-6);
    EXPECT_NEAR(gamma_quantile(0.5, 10.0, 1.0), ref, 1e-9);
    EXPECT_NEAR(gamma_quantile(0.5, 10.0, 2.0), 2.0 * ref, 1e-8);
}

TEST(GammaQuantile, LowerLimit) {
    EXPECT_EQ(gamma_quantile(0.0, 3.0, 1.0), 0.0);
    EXPECT_LT(gamma_quantile(1e-300, 3.0, 1.0), 1e-90);
}

TEST(GammaP, MatchesSeriesOracle) {
    for (double a : {0.5, 1.0, 4.0, 25.0}) {
        for (double x : {0.1, 1.0, 5.0, 30.0}) EXPECT_NEAR(gamma_p(a, x), oracle::gamma_p_series(a, x), 1e-12) << a << " " << x;
    }
}

TEST(WlsFit, ExactLineAnyWeights) {
    const std::vector<double> x{0.5, 1.0, 2.0, 3.5, 7.0};
    std::vector<double> y;
    for (double xi : x) y.push_back(2.0 + 3.0 * xi);
    const WlsFit f = wls_fit(x, y, std::vector<double>{1.0, 9.0, 0.1, 2.0, 5.0});
    EXPECT_NEAR(f.intercept(), 2.0, 1e-12);
    EXPECT_NEAR(f.slope(), 3.0, 1e-12);
    EXPECT_EQ(f.residual_variance, 0.0);
}

TEST(WlsFit, EqualWeightsMatchOls) {
    const std::vector<double> x{1, 2, 3, 4, 5, 6};
    const std::vector<double> y{1.1, 1.9, 3.4, 3.8, 5.3, 5.9};
    const WlsFit a = wls_fit(x, y, std::vector<double>(6, 2.5));
    const WlsFit b = ols_fit(x, y);
    EXPECT_NEAR(a.intercept(), b.intercept(), 1e-13);
    EXPECT_NEAR(a.slope(), b.slope(), 1e-13);
    EXPECT_NEAR(a.slope_se(), b.slope_se(), 1e-13);
}

TEST(WlsFit, HandNormalEquations) {
    const std::vector<double> x{1, 2, 3}, y{1, 2, 4}, w{1, 1, 1};
    const WlsFit f = wls_fit(x, y, w);
    const oracle::Line ref = oracle::normal_equations(x, y, w);
    EXPECT_NEAR(ref.slope, 1.5, 1e-14);
    EXPECT_NEAR(ref.intercept, -2.0 / 3.0, 1e-14);
    EXPECT_NEAR(f.slope(), ref.slope, 1e-12);
    EXPECT_NEAR(f.intercept(), ref.intercept, 1e-12);
    EXPECT_NEAR(f.slope_se(), ref.se_slope, 1e-12);
    EXPECT_NEAR(f.intercept_se(), ref.se_intercept, 1e-12);
    EXPECT_EQ(f.df_residual, 1);
}

TEST(WlsFit, Errors) {
    const std::vector<double> x{1, 1, 1}, y{1, 2, 3}, w{1, 1, 1};
    EXPECT_THROW(wls_fit(x, y, w), Error);
    try {
        wls_fit(x, y, w);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularDesign);
    }
    EXPECT_THROW(wls_fit(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}, std::vector<double>{1, 1}), Error);
}

TEST(FindRoot, Examples) {
    EXPECT_NEAR(find_root([](double x) { return x - 1; }, 0, 2), 1.0, 1e-12);
    EXPECT_NEAR(find_root([](double x) { return x * x * x - 2; }, 0, 2), std::cbrt(2.0), 1e-11);
    try {
        find_root([](double x) { return x + 5; }, 0, 1);
        FAIL() << "expected NoBracket";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoBracket);
    }
}

TEST(ExpandBracket, FindsSignChange) {
    double lo = -1, hi = 1;
    EXPECT_TRUE(expand_bracket([](double x) { return x - 100; }, lo, hi));
    EXPECT_LE(lo, 100.0);
    EXPECT_GE(hi, 100.0);
    lo = -1, hi = 1;
    EXPECT_FALSE(expand_bracket([](double x) { return x * x + 1; }, lo, hi, 10));
}

TEST(MaximizeBounded, Quadratic) {
    const std::vector<double> lo{-10, -10}, hi{10, 10}, start{0, 0};
    const auto r = maximize_bounded([](std::span<const double> p) { return -(p[0] - 1) * (p[0] - 1) - (p[1] - 2) * (p[1] - 2); },
                                    lo, hi, start);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.argmax[0], 1.0, 1e-4);
    EXPECT_NEAR(r.argmax[1], 2.0, 1e-4);
}

TEST(MaximizeBounded, ConstantReturnsStart) {
    const std::vector<double> lo{-1, -1}, hi{1, 1}, start{0.3, -0.2};
    const auto r = maximize_bounded([](std::span<const double>) { return 4.0; }, lo, hi, start);
    EXPECT_TRUE(r.converged);
    EXPECT_DOUBLE_EQ(r.argmax[0], 0.3);
    EXPECT_DOUBLE_EQ(r.argmax[1], -0.2);
}

TEST(MaximizeBounded, Rosenbrock) {
    const std::vector<double> lo{-5, -5}, hi{5, 5}, start{-1.2, 1.0};
    MaximizeOptions opt;
    opt.max_evaluations = 20000;
    opt.tolerance = 1e-12;
    const auto r = maximize_bounded(
        [](std::span<const double> p) {
            return -(100 * (p[1] - p[0] * p[0]) * (p[1] - p[0] * p[0]) + (1 - p[0]) * (1 - p[0]));
        },
        lo, hi, start, opt);
    EXPECT_NEAR(r.argmax[0], 1.0, 1e-4);
    EXPECT_NEAR(r.argmax[1], 1.0, 1e-4);
}

TEST(MaximizeBounded, OptimumOutsideBoxClampsToBoundary) {
    const std::vector<double> lo{0, 0}, hi{1, 1}, start{0.5, 0.5};
    const auto r = maximize_bounded([](std::span<const double> p) { return -(p[0] - 3) * (p[0] - 3) - (p[1] + 2) * (p[1] + 2); },
                                    lo, hi, start);
    EXPECT_NEAR(r.argmax[0], 1.0, 1e-6);
    EXPECT_NEAR(r.argmax[1], 0.0, 1e-6);
}
