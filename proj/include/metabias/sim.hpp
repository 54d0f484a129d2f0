#pragma once

#include "metabias/effects.hpp"

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace metabias::sim {

enum class VarianceScenario { equal, unequal };

std::string_view variance_scenario_name(VarianceScenario v) noexcept;
VarianceScenario parse_variance_scenario(std::string_view s);

struct SimConfig {
    int m = 10;
    double delta = 15.0;  // Poisson mean arm size
    double eta = 5.0;     // raw treatment effect, outcome units
    double tau2 = 0.0;    // between-study variance of the raw effect
    VarianceScenario variance_scenario = VarianceScenario::equal;
    EffectKind effect_kind = EffectKind::cohen_d;
    double alpha = 0.05;
    double pi_pub = 0.0;  // probability a non-significant study is suppressed
    int replicates = 1000;
    std::uint64_t seed = 1;

    /// Throws ConfigError on out-of-range fields.
    void validate() const;
};

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream, substream), derived by SplitMix64
/// mixing so that replicate r gets the same numbers whichever worker runs it.
Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0);

struct GeneratedStudy {
    StudySummary summary;
    double df_for_test = 0.0;
    bool significant = false;
    bool published = false;
};

/// Welch-Satterthwaite df for two arms with variances var0, var1.
double satterthwaite_df(double var0, int n0, double var1, int n1);

/// Draws one two-arm study. Arm sizes ~ Poisson(delta) redrawn below 2;
/// S^2 ~ N(100, 10^2) redrawn below 1; reported SDs are sample SDs.
GeneratedStudy generate_study(const SimConfig& cfg, Rng& rng);

/// Critical values t_{1-alpha/2, df}, memoized for integer df. The memo is
/// filled lazily, so give each worker thread its own instance.
class CriticalValues {
public:
    explicit CriticalValues(double alpha);
    double operator()(double df) const;
    double alpha() const noexcept { return alpha_; }

private:
    double alpha_;
    mutable std::vector<double> integer_table_;
};

/// One-sided significance of the pooled-SD t statistic of Cohen's d.
bool is_significant(const GeneratedStudy& study, const CriticalValues& crit);

/// Marks study.significant, decides publication (significant studies always;
/// others when U(0,1) <= 1 - pi_pub) and returns the publication flag.
bool apply_selection(GeneratedStudy& study, const SimConfig& cfg, Rng& rng, const CriticalValues& crit);
bool apply_selection(GeneratedStudy& study, const SimConfig& cfg, Rng& rng);

/// Solves p_sig + (1 - p_sig)(1 - pi) = target for pi, clamped to [0, 1].
/// Throws TargetUnreachable when p_sig > target.
double pi_pub_for_rate(double p_sig, double target_rate);

/// Monte Carlo estimate of the per-study significance probability.
double estimate_p_significant(const SimConfig& cfg, int calib_reps, Rng& rng);

/// pi_pub_for_rate(estimate_p_significant(...), target_rate).
double calibrate_pi_pub(const SimConfig& cfg, double target_rate, int calib_reps, Rng& rng);

/// Population standardized effect eta * E[1 / S_pool] under the scenario's
/// variance law, by quadrature over the truncated normal distribution of S^2.
double true_smd(double eta, VarianceScenario scenario);

struct MetaSample {
    std::vector<EffectEstimate> published;
    std::vector<EffectEstimate> all;
    double truth = 0.0;
    int regenerations = 0;
};

/// m studies with selection applied; regenerated until >= 3 are published.
MetaSample generate_meta(const SimConfig& cfg, Rng& rng, const CriticalValues& crit);
MetaSample generate_meta(const SimConfig& cfg, Rng& rng);

}  // namespace metabias::sim
