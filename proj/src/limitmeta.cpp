#include "metabias/limitmeta.hpp"

#include "metabias/error.hpp"
#include "metabias/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace metabias {

LimitMetaResult limit_meta(std::span<const EffectEstimate> effects) {
    const std::size_t m = effects.size();
    if (m < 3) throw Error(ErrorCode::InsufficientStudies, "limit_meta needs at least 3 studies");

    LimitMetaResult r;
    const double tau2 = dl_tau2(effects);
    r.tau_hat = std::sqrt(tau2);

    std::vector<double> x(m), z(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double scale = effects[i].se() + r.tau_hat;
        x[i] = 1.0 / scale;
        z[i] = effects[i].value / scale;
    }
    const numerics::WlsFit fit = numerics::ols_fit(x, z);
    r.intercept = fit.intercept();
    r.slope = fit.slope();
    r.alpha_hat = r.intercept;
    r.reg_cov = fit.covariance;

    const double t = r.tau_hat;
    const double var = fit.covariance[1][1] + t * t * fit.covariance[0][0] + 2.0 * t * fit.covariance[0][1];

    MetaResult& p = r.pooled;
    p.method = Method::limit_meta;
    p.estimate = r.slope + t * r.intercept;
    p.se = std::sqrt(std::max(0.0, var));
    p.ci_low = p.estimate - numerics::kZ975 * p.se;
    p.ci_high = p.estimate + numerics::kZ975 * p.se;
    p.tau2 = tau2;
    p.diagnostics["alpha_hat"] = r.alpha_hat;
    p.diagnostics["radial_slope"] = r.slope;
    return r;
}

}  // namespace metabias
