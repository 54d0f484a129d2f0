#include "metabias/error.hpp"
#include "metabias/meta_core.hpp"
#include "metabias/numerics.hpp"
#include "metabias/sim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace metabias;
using namespace metabias::sim;

namespace {

SimConfig base_config() {
    SimConfig c;
    c.m = 10;
    c.delta = 15;
    c.eta = 5;
    c.tau2 = 0;
    c.variance_scenario = VarianceScenario::equal;
    c.effect_kind = EffectKind::cohen_d;
    c.alpha = 0.05;
    c.pi_pub = 0.0;
    c.replicates = 100;
    c.seed = 1;
    return c;
}

}  // namespace

TEST(GenerateStudy, NullEffectMeanDifference) {
    SimConfig c = base_config();
    c.eta = 0;
    Rng rng = make_stream(3, 0, 0);
    const int n = 100000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const StudySummary s = generate_study(c, rng).summary;
        const double diff = s.mean1 - s.mean0;
        sum += diff;
        sq += diff * diff;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_LT(std::fabs(mean), 3 * se);
}

TEST(GenerateStudy, PoissonArmSize) {
    SimConfig c = base_config();
    Rng rng = make_stream(4, 0, 0);
    const int n = 100000;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
        const StudySummary s = generate_study(c, rng).summary;
        sum += s.n1 + s.n0;
        EXPECT_GE(std::min(s.n1, s.n0), 2);
    }
    EXPECT_NEAR(sum / (2.0 * n), 15.0, 3 * std::sqrt(15.0 / (2.0 * n)));
}

TEST(GenerateStudy, UnequalScenarioUsesSatterthwaite) {
    SimConfig c = base_config();
    c.variance_scenario = VarianceScenario::unequal;
    Rng rng = make_stream(5, 0, 0);
    const GeneratedStudy g = generate_study(c, rng);
    const auto& s = g.summary;
    EXPECT_NEAR(g.df_for_test, satterthwaite_df(s.sd0 * s.sd0, s.n0, s.sd1 * s.sd1, s.n1), 1e-12);
}

TEST(Satterthwaite, EqualReduction) {
    EXPECT_NEAR(satterthwaite_df(4.0, 12, 4.0, 12), 22.0, 1e-12);
    EXPECT_LT(satterthwaite_df(1.0, 12, 9.0, 12), 22.0);
}

TEST(Selection, ZeroSuppressionPublishesAll) {
    SimConfig c = base_config();
    Rng rng = make_stream(6, 0, 0);
    const CriticalValues crit(c.alpha);
    for (int i = 0; i < 2000; ++i) {
        GeneratedStudy g = generate_study(c, rng);
        EXPECT_TRUE(apply_selection(g, c, rng, crit));
    }
}

TEST(Selection, FullSuppressionKeepsOnlySignificant) {
    SimConfig c = base_config();
    c.pi_pub = 1.0;
    Rng rng = make_stream(7, 0, 0);
    const CriticalValues crit(c.alpha);
    int published = 0;
    for (int i = 0; i < 2000; ++i) {
        GeneratedStudy g = generate_study(c, rng);
        const bool pub = apply_selection(g, c, rng, crit);
        EXPECT_EQ(pub, g.significant);
        published += pub;
    }
    EXPECT_GT(published, 0);
    EXPECT_LT(published, 2000);
}

TEST(Selection, SignificanceMatchesTTest) {
    SimConfig c = base_config();
    Rng rng = make_stream(8, 0, 0);
    const CriticalValues crit(c.alpha);
    for (int i = 0; i < 500; ++i) {
        const GeneratedStudy g = generate_study(c, rng);
        const auto& s = g.summary;
        const double sp = std::sqrt(((s.n1 - 1) * s.sd1 * s.sd1 + (s.n0 - 1) * s.sd0 * s.sd0) / (s.n1 + s.n0 - 2));
        const double t = (s.mean1 - s.mean0) / (sp * std::sqrt(1.0 / s.n1 + 1.0 / s.n0));
        EXPECT_EQ(is_significant(g, crit), t > numerics::t_quantile(0.975, s.n1 + s.n0 - 2));
    }
}

TEST(PiPubForRate, Algebra) {
    EXPECT_NEAR(pi_pub_for_rate(0.0, 0.8), 0.2, 1e-15);
    EXPECT_NEAR(pi_pub_for_rate(0.5, 0.8), 0.4, 1e-15);
    EXPECT_EQ(pi_pub_for_rate(0.3, 1.0), 0.0);
    try {
        pi_pub_for_rate(0.9, 0.8);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TargetUnreachable);
    }
}

TEST(Calibration, ClosedLoopPublishedFraction) {
    SimConfig c = base_config();
    Rng calib = make_stream(11, 0, 0);
    c.pi_pub = calibrate_pi_pub(c, 0.8, 2000, calib);
    const CriticalValues crit(c.alpha);
    double published = 0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_stream(11, 0, static_cast<std::uint64_t>(r) + 1);
        published += static_cast<double>(generate_meta(c, rng, crit).published.size());
    }
    const double mean = published / reps;
    EXPECT_NEAR(mean / c.m, 0.8, 0.02);
    EXPECT_GE(mean, 7.8);
    EXPECT_LE(mean, 8.4);
}

TEST(GenerateMeta, NoSuppressionPublishesEverything) {
    SimConfig c = base_config();
    const CriticalValues crit(c.alpha);
    for (int r = 0; r < 200; ++r) {
        Rng rng = make_stream(12, 0, static_cast<std::uint64_t>(r));
        const MetaSample s = generate_meta(c, rng, crit);
        EXPECT_EQ(s.published.size(), 10u);
        EXPECT_EQ(s.regenerations, 0);
    }
}

TEST(TrueSmd, MatchesMonteCarloOracle) {
    std::mt19937_64 rng(123);
    std::normal_distribution<double> norm(100.0, 10.0);
    const int n = 10000000;
    double sum_eq = 0, sum_uneq = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        double v;
        do v = norm(rng);
        while (v < 1.0);
        const double a = 1.0 / std::sqrt(v);
        sum_eq += a;
        sq += a * a;
        sum_uneq += 1.0 / std::sqrt(0.9 * v);
    }
    const double mean = sum_eq / n;
    const double mc_se = 5.0 * std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(true_smd(5.0, VarianceScenario::equal), 5.0 * mean, 4 * mc_se);
    EXPECT_NEAR(true_smd(5.0, VarianceScenario::unequal), 5.0 * sum_uneq / n, 4 * mc_se / std::sqrt(0.9));
    EXPECT_NEAR(true_smd(5.0, VarianceScenario::equal), 0.5, 0.02);
}

TEST(Streams, DeterministicAndDistinct) {
    Rng a = make_stream(1, 2, 3), b = make_stream(1, 2, 3), c = make_stream(1, 2, 4), d = make_stream(1, 3, 3);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
}

TEST(Pipeline, NullCoverageAnchor) {
    SimConfig c = base_config();
    c.eta = 0.0;
    const CriticalValues crit(c.alpha);
    int covered = 0;
    const int reps = 5000;
    for (int r = 0; r < reps; ++r) {
        Rng rng = make_stream(13, 0, static_cast<std::uint64_t>(r));
        const MetaSample s = generate_meta(c, rng, crit);
        const MetaResult dl = dl_random_effects(s.published);
        covered += dl.ci_low <= 0.0 && 0.0 <= dl.ci_high;
    }
    const double cov = static_cast<double>(covered) / reps;
    EXPECT_GE(cov, 0.92);
    EXPECT_LE(cov, 0.97);
}

TEST(SimConfig, Validation) {
    SimConfig c = base_config();
    c.m = 1;
    EXPECT_THROW(c.validate(), Error);
    c = base_config();
    c.pi_pub = 1.5;
    EXPECT_THROW(c.validate(), Error);
}
