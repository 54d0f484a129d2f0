#pragma once

#include "metabias/effects.hpp"
#include "metabias/meta_core.hpp"

#include <span>
#include <vector>

namespace metabias {

struct TrimFillResult {
    MetaResult pooled;  // DL fit on observed + imputed studies
    int l0_final = 0;
    int iterations = 0;
    std::vector<EffectEstimate> imputed_effects;
    bool converged = true;
};

/// Rank-based estimate of the number of studies missing on the left of
/// `center`: floor([4 T - m (m+1)] / [2m - 1]) clamped at 0, where T is the
/// sum of the ranks of |y_i - center| (average ranks on ties) over studies
/// with y_i > center.
int estimate_l0(std::span<const EffectEstimate> effects, double center);

/// Iterative trim and fill around DL random-effects centers. When L0 has not
/// settled after max_iter rounds the last state is returned with
/// converged = false and the "no-convergence" flag on the pooled result.
TrimFillResult trim_and_fill(std::span<const EffectEstimate> effects, int max_iter = 50);

}  // namespace metabias
