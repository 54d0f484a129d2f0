#pragma once

#include "metabias/effects.hpp"
#include "metabias/meta_core.hpp"

#include <span>

namespace metabias {

struct PUniformResult {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_significant = 0;
    double l_stat_at_estimate = 0.0;

    MetaResult to_meta_result() const;
};

/// Probability of an effect at least as large as the observed one given the
/// study reached significance, under true effect y:
/// [1 - Phi((value - y)/se)] / [1 - Phi((crit - y)/se)].
/// Throws NotSignificant when value < crit.
double conditional_p(double y, const EffectEstimate& effect, double crit);

/// Positive-direction critical value on the SMD scale:
/// t_{1-alpha/2, df} / sqrt(n1 n0 / (n1 + n0)).
double smd_critical_value(const EffectEstimate& effect, double alpha);

/// L(y) = -sum log conditional_p over the significant subset; decreasing in y.
double l_statistic(double y, std::span<const EffectEstimate> significant, std::span<const double> crit);

/// Throws NoSignificantStudies, or EstimateAtBoundary when L(y) has no root
/// (every significant study sits exactly at its critical value).
PUniformResult p_uniform(std::span<const EffectEstimate> effects, double alpha = 0.05);

}  // namespace metabias
