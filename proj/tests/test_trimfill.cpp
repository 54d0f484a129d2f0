#include "metabias/error.hpp"
#include "metabias/trimfill.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace metabias;
using oracle::effect;

namespace {

std::vector<EffectEstimate> make(const std::vector<double>& y, const std::vector<double>& v) {
    std::vector<EffectEstimate> e;
    for (std::size_t i = 0; i < y.size(); ++i) e.push_back(effect(y[i], v[i]));
    return e;
}

}  // namespace

TEST(EstimateL0, SymmetricIsZero) {
    const auto e = make({-2, -1, 0, 1, 2}, std::vector<double>(5, 1.0));
    EXPECT_EQ(estimate_l0(e, 0.0), 0);
}

TEST(EstimateL0, AllAboveCenterByHand) {
    // Distances from 1 are 0,1,2,3,4 so the four studies above carry ranks 2..5:
    // T = 14, L0 = floor((56 - 30) / 9) = 2.
    const auto e = make({1, 2, 3, 4, 5}, std::vector<double>(5, 1.0));
    EXPECT_EQ(estimate_l0(e, 1.0), 2);
}

TEST(EstimateL0, TwoStudiesAboveCenter) {
    const auto e = make({1, 2}, {1, 1});
    EXPECT_EQ(estimate_l0(e, 0.0), 2);
}

TEST(EstimateL0, TiesShareAverageRank) {
    // Distances 1,1,2: ranks 1.5,1.5,3. Above: 1 and 2 -> T = 4.5,
    // L0 = floor((18 - 12) / 5) = 1.
    const auto e = make({1, -1, 2}, {1, 1, 1});
    EXPECT_EQ(estimate_l0(e, 0.0), 1);
}

TEST(TrimAndFill, SymmetricFunnel) {
    const auto e = make({-0.4, -0.1, 0.2, 0.5, 0.8}, {0.2, 0.05, 0.01, 0.05, 0.2});
    const TrimFillResult r = trim_and_fill(e);
    EXPECT_EQ(r.l0_final, 0);
    EXPECT_TRUE(r.imputed_effects.empty());
    const MetaResult dl = dl_random_effects(e);
    EXPECT_DOUBLE_EQ(r.pooled.estimate, dl.estimate);
}

TEST(TrimAndFill, HandTraceRightOutlier) {
    // DL center 0.6; distances 0.5,0.4,0.3,0.2,1.4 give T = 5 and a negative
    // L0, so nothing is imputed. DL on the data: tau2 = 0.615, estimate 0.6.
    const auto e = make({0.1, 0.2, 0.3, 0.4, 2.0}, std::vector<double>(5, 0.01));
    const TrimFillResult r = trim_and_fill(e);
    EXPECT_EQ(r.l0_final, 0);
    EXPECT_NEAR(r.pooled.estimate, 0.6, 1e-12);
    EXPECT_NEAR(r.pooled.tau2, 0.615, 1e-12);
}

TEST(TrimAndFill, HandTraceWithImputation) {
    // Iteration trace: L0 = 1, 2, 3, 3 with centers 0.43219, 0.36790,
    // 0.31427, 0.27421; the three largest effects are mirrored about the
    // final center.
    const std::vector<double> y{0.05, 0.3, 0.35, 0.4, 0.5, 0.7, 0.9, 1.2};
    const std::vector<double> v{0.01, 0.02, 0.02, 0.03, 0.05, 0.08, 0.1, 0.15};
    const TrimFillResult r = trim_and_fill(make(y, v));
    EXPECT_EQ(r.l0_final, 3);
    EXPECT_EQ(r.iterations, 4);
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.pooled.diagnostics.at("center"), 0.2742055803852094, 1e-12);
    ASSERT_EQ(r.imputed_effects.size(), 3u);
    EXPECT_NEAR(r.imputed_effects[0].value, -0.6515888392295811, 1e-12);
    EXPECT_NEAR(r.imputed_effects[1].value, -0.3515888392295812, 1e-12);
    EXPECT_NEAR(r.imputed_effects[2].value, -0.1515888392295811, 1e-12);
    EXPECT_DOUBLE_EQ(r.imputed_effects[0].variance, 0.15);
    EXPECT_NEAR(r.pooled.estimate, 0.2917035808286857, 1e-12);
    EXPECT_NEAR(r.pooled.tau2, 0.07963932384769462, 1e-12);
    EXPECT_NEAR(r.pooled.se, 0.11150156187981745, 1e-12);
}

TEST(TrimAndFill, IdenticalEffects) {
    const auto e = make({0.3, 0.3, 0.3, 0.3}, {0.01, 0.02, 0.04, 0.08});
    const TrimFillResult r = trim_and_fill(e);
    EXPECT_EQ(r.l0_final, 0);
    EXPECT_NEAR(r.pooled.estimate, 0.3, 1e-14);
}

TEST(TrimAndFill, TooFewStudies) {
    EXPECT_THROW(trim_and_fill(make({0.1, 0.2}, {1, 1})), Error);
}
