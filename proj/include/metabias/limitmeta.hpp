#pragma once

#include "metabias/effects.hpp"
#include "metabias/meta_core.hpp"

#include <array>
#include <span>

namespace metabias {

struct LimitMetaResult {
    MetaResult pooled;     // adjusted estimate slope + tau_hat * intercept
    double alpha_hat = 0.0;  // radial-plot intercept (small-study bias)
    double tau_hat = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::array<std::array<double, 2>, 2> reg_cov{};
};

/// Limit meta-analysis via OLS on the generalized radial plot:
/// y_i/(se_i + tau) against 1/(se_i + tau), tau from DerSimonian-Laird.
LimitMetaResult limit_meta(std::span<const EffectEstimate> effects);

}  // namespace metabias
