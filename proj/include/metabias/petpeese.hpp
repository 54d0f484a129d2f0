#pragma once

#include "metabias/effects.hpp"
#include "metabias/meta_core.hpp"

#include <array>
#include <optional>
#include <span>

namespace metabias {

/// OLS fit of the Egger regression y_i/se_i = alpha0 + alpha1 / se_i.
/// alpha1 is the precision-effect (PET) estimate; alpha0 is the funnel
/// asymmetry coefficient.
struct PetFit {
    double alpha0 = 0.0;
    double alpha1 = 0.0;
    std::array<std::array<double, 2>, 2> cov{};
    double t_stat = 0.0;  // alpha1 / SE(alpha1)
    double p_value = 1.0;
    double alpha0_t = 0.0;
    double alpha0_p = 1.0;
    int df = 0;
};

PetFit pet(std::span<const EffectEstimate> effects);

enum class PetPeeseBranch { pet, peese };

struct PetPeeseResult {
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    PetPeeseBranch branch = PetPeeseBranch::pet;
    double pet_t = 0.0;
    double pet_p = 1.0;
    double pet_alpha0 = 0.0;
    std::optional<double> peese_gamma1;

    MetaResult to_meta_result() const;
};

/// Weighted regression y_i = gamma0 + gamma1 * variance_i with weights 1/variance_i.
struct PeeseFit {
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double gamma0_se = 0.0;
    int df = 0;
};

PeeseFit peese(std::span<const EffectEstimate> effects);

/// Conditional estimator: PET slope unless its two-sided t-test rejects
/// alpha1 = 0 at branch_alpha, then the PEESE intercept. Both intervals use
/// t quantiles with m - 2 df.
PetPeeseResult pet_peese(std::span<const EffectEstimate> effects, double branch_alpha = 0.05);

}  // namespace metabias
