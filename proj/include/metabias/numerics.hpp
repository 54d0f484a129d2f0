#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace metabias::numerics {

inline constexpr double kZ975 = 1.959963984540054;

// ---------------------------------------------------------------------------
// Normal distribution
// ---------------------------------------------------------------------------

double norm_pdf(double x) noexcept;
double norm_cdf(double x) noexcept;
/// Upper tail 1 - Phi(x), computed without cancellation.
double norm_sf(double x) noexcept;
/// log Phi(x), finite for every finite x (asymptotic series in the far tail).
double log_norm_cdf(double x) noexcept;
double log_norm_sf(double x) noexcept;
/// Inverse of norm_cdf (Wichura AS241, ~1e-16 relative).
double norm_quantile(double p);

// ---------------------------------------------------------------------------
// Gamma / Beta families
// ---------------------------------------------------------------------------

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double gamma_q(double a, double x);
double gamma_cdf(double x, double shape, double scale);
double gamma_quantile(double p, double shape, double scale);

/// Regularized incomplete beta I_x(a, b).
double beta_inc(double x, double a, double b);

double t_pdf(double x, double df);
double t_cdf(double x, double df);
/// Two-sided p-value of a t statistic.
double t_two_sided_p(double t, double df);
/// Quantile of Student's t; df may be any positive real.
double t_quantile(double p, double df);

// ---------------------------------------------------------------------------
// Weighted least squares (intercept + one slope)
// ---------------------------------------------------------------------------

struct WlsFit {
    std::array<double, 2> coefficients{};              // intercept, slope
    std::array<std::array<double, 2>, 2> covariance{};  // residual_variance * (X'WX)^-1
    double residual_variance = 0.0;
    int df_residual = 0;

    double intercept() const noexcept { return coefficients[0]; }
    double slope() const noexcept { return coefficients[1]; }
    double intercept_se() const;
    double slope_se() const;
};

WlsFit wls_fit(std::span<const double> x, std::span<const double> y, std::span<const double> weights);
WlsFit ols_fit(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Root finding and bounded maximization
// ---------------------------------------------------------------------------

/// Bisection on [lo, hi] to |hi - lo| <= tol. Throws NoBracket when the
/// endpoint signs agree.
double find_root(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12);

/// Widens [lo, hi] geometrically around its midpoint until f changes sign.
/// Returns false if no sign change after max_expansions.
bool expand_bracket(const std::function<double(double)>& f, double& lo, double& hi, int max_expansions = 50);

struct MaximizeOptions {
    std::vector<double> initial_step;  // empty: 10% of each box side
    int max_evaluations = 2000;
    double tolerance = 1e-8;           // simplex diameter
};

struct MaximizeResult {
    std::vector<double> argmax;
    double value = 0.0;
    bool converged = false;
    int evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder-Mead simplex search for a maximum inside the box [lower, upper].
/// Vertices are projected onto the box, so every evaluation is feasible.
MaximizeResult maximize_bounded(const Objective& f, std::span<const double> lower, std::span<const double> upper,
                                std::span<const double> start, const MaximizeOptions& options = {});

}  // namespace metabias::numerics
