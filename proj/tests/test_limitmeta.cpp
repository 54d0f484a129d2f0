#include "metabias/error.hpp"
#include "metabias/limitmeta.hpp"
#include "metabias/numerics.hpp"
#include "metabias/petpeese.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace metabias;
using oracle::effect;

namespace {

double dl_tau2_by_hand(const std::vector<double>& y, const std::vector<double>& v) {
    double sw = 0, swy = 0, sww = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sw += 1 / v[i];
        swy += y[i] / v[i];
        sww += 1 / (v[i] * v[i]);
    }
    double q = 0;
    for (std::size_t i = 0; i < y.size(); ++i) q += (y[i] - swy / sw) * (y[i] - swy / sw) / v[i];
    return std::max(0.0, (q - (y.size() - 1)) / (sw - sww / sw));
}

}  // namespace

TEST(LimitMeta, IdenticalEffects) {
    const std::vector<EffectEstimate> e{effect(0.4, 0.01), effect(0.4, 0.04), effect(0.4, 0.09), effect(0.4, 0.02)};
    const LimitMetaResult r = limit_meta(e);
    EXPECT_EQ(r.tau_hat, 0.0);
    EXPECT_NEAR(r.alpha_hat, 0.0, 1e-10);
    EXPECT_NEAR(r.pooled.estimate, 0.4, 1e-12);
}

TEST(LimitMeta, ExactRadialLine) {
    // y = 2 + 0.5 se keeps Q below its df, so tau_hat = 0 and the radial
    // points sit on z = 0.5 + 2 x.
    const std::vector<double> se{0.10, 0.14, 0.18, 0.22, 0.26, 0.30};
    std::vector<EffectEstimate> e;
    for (double s : se) e.push_back(effect(2.0 + 0.5 * s, s * s));
    const LimitMetaResult r = limit_meta(e);
    ASSERT_EQ(r.tau_hat, 0.0);
    EXPECT_NEAR(r.alpha_hat, 0.5, 1e-10);
    EXPECT_NEAR(r.slope, 2.0, 1e-10);
    EXPECT_NEAR(r.pooled.estimate, 2.0 + r.tau_hat * 0.5, 1e-10);
}

TEST(LimitMeta, HeterogeneousHandSolve) {
    const std::vector<double> y{0.9, 0.1, 0.65, -0.3, 1.4, 0.35};
    const std::vector<double> v{0.04, 0.01, 0.09, 0.02, 0.16, 0.05};
    std::vector<EffectEstimate> e;
    for (std::size_t i = 0; i < y.size(); ++i) e.push_back(effect(y[i], v[i]));
    const double tau = std::sqrt(dl_tau2_by_hand(y, v));
    ASSERT_GT(tau, 0.0);
    std::vector<double> x, z;
    for (std::size_t i = 0; i < y.size(); ++i) {
        x.push_back(1 / (std::sqrt(v[i]) + tau));
        z.push_back(y[i] / (std::sqrt(v[i]) + tau));
    }
    const oracle::Line ref = oracle::normal_equations(x, z, std::vector<double>(y.size(), 1.0));
    const LimitMetaResult r = limit_meta(e);
    EXPECT_NEAR(r.tau_hat, tau, 1e-12);
    EXPECT_NEAR(r.intercept, ref.intercept, 1e-10);
    EXPECT_NEAR(r.slope, ref.slope, 1e-10);
    EXPECT_NEAR(r.pooled.estimate, ref.slope + tau * ref.intercept, 1e-10);
    // Delta-method variance of slope + tau * intercept.
    const auto& c = r.reg_cov;
    const double var = c[1][1] + tau * tau * c[0][0] + 2 * tau * c[0][1];
    EXPECT_NEAR(r.pooled.se, std::sqrt(var), 1e-12);
    EXPECT_NEAR(r.pooled.ci_high - r.pooled.estimate, numerics::kZ975 * r.pooled.se, 1e-12);
}

TEST(LimitMeta, CoincidesWithPetWhenTauIsZero) {
    const std::vector<double> y{0.30, 0.42, 0.25, 0.38, 0.33};
    const std::vector<double> v{0.04, 0.09, 0.02, 0.06, 0.03};
    std::vector<EffectEstimate> e;
    for (std::size_t i = 0; i < y.size(); ++i) e.push_back(effect(y[i], v[i]));
    const LimitMetaResult r = limit_meta(e);
    ASSERT_EQ(r.tau_hat, 0.0);
    const PetFit p = pet(e);
    EXPECT_NEAR(r.slope, p.alpha1, 1e-10);
    EXPECT_NEAR(r.intercept, p.alpha0, 1e-10);
    EXPECT_DOUBLE_EQ(r.pooled.estimate, r.slope);
}

TEST(LimitMeta, TooFewStudies) {
    const std::vector<EffectEstimate> e{effect(0.4, 0.01), effect(0.5, 0.04)};
    EXPECT_THROW(limit_meta(e), Error);
}
