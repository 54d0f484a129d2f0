#pragma once

#include "metabias/effects.hpp"
#include "metabias/meta_core.hpp"

#include <span>
#include <utility>
#include <vector>

namespace metabias {

/// Fitted Copas model at one (a1, a2) selection setting. Studies are
/// published when a1 + a2/se_i + delta_i > 0 with delta_i ~ N(0,1)
/// correlated with the sampling error through rho.
struct CopasGridPoint {
    double a1 = 0.0;
    double a2 = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double tau2 = 0.0;
    double rho = 0.0;
    double n_unpublished = 0.0;
    double asymmetry_p = 1.0;
    double loglik = 0.0;
    bool converged = false;
};

using CopasGrid = std::vector<std::pair<double, double>>;

/// Conditional log-likelihood sum_i log p(y_i | z_i > 0, se_i).
/// Throws NumericUnderflow when some Phi(a1 + a2/se_i) < 1e-300.
double copas_loglik(double y, double tau2, double rho, double a1, double a2, std::span<const EffectEstimate> effects);

/// a1 in {-1,...,2} by 0.5, a2 in {0, .25, .5, 1, 2} times the median SE.
CopasGrid default_copas_grid(std::span<const EffectEstimate> effects);

std::vector<CopasGridPoint> copas_fit_grid(std::span<const EffectEstimate> effects, const CopasGrid& grid);

/// Picks the least-selection fit whose residual asymmetry test has p > 0.1.
MetaResult copas_select(std::span<const CopasGridPoint> points);

/// copas_select(copas_fit_grid(effects, default_copas_grid(effects))).
MetaResult copas(std::span<const EffectEstimate> effects);

/// Random-effects maximum likelihood (no selection), by Fisher scoring on tau2.
struct ReMlFit {
    double estimate = 0.0;
    double se = 0.0;
    double tau2 = 0.0;
    double loglik = 0.0;
    int iterations = 0;
};

ReMlFit re_ml(std::span<const EffectEstimate> effects);

/// Normal random-effects log-likelihood at (y, tau2).
double re_loglik(double y, double tau2, std::span<const EffectEstimate> effects);

}  // namespace metabias
