#include "metabias/petpeese.hpp"

#include "metabias/error.hpp"
#include "metabias/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace metabias {

namespace {

// t statistic that survives exact fits: a zero standard error gives t = 0
// when the coefficient is rounding noise relative to `scale`, +-inf otherwise.
double safe_t(double coef, double se, double scale) {
    if (se > 0.0) {
        if (std::fabs(coef) <= 1e-12 * scale && se <= 1e-12 * scale) return 0.0;
        return coef / se;
    }
    if (std::fabs(coef) <= 1e-12 * scale) return 0.0;
    return coef > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

void require_at_least(std::span<const EffectEstimate> effects, std::size_t n, const char* who) {
    if (effects.size() < n) {
        throw Error(ErrorCode::InsufficientStudies,
                    std::string(who) + " needs at least " + std::to_string(n) + " studies");
    }
}

}  // namespace

PetFit pet(std::span<const EffectEstimate> effects) {
    require_at_least(effects, 3, "pet");
    const std::size_t m = effects.size();
    std::vector<double> precision(m), z(m);
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double se = effects[i].se();
        if (!(se > 0.0)) throw Error(ErrorCode::DomainError, "pet: standard errors must be positive");
        precision[i] = 1.0 / se;
        z[i] = effects[i].value / se;
        scale = std::max(scale, std::fabs(z[i]));
    }
    const numerics::WlsFit fit = numerics::ols_fit(precision, z);

    PetFit r;
    r.alpha0 = fit.intercept();
    r.alpha1 = fit.slope();
    r.cov = fit.covariance;
    r.df = fit.df_residual;
    const double s = std::max(scale, 1.0);
    r.t_stat = safe_t(r.alpha1, fit.slope_se(), s);
    r.p_value = numerics::t_two_sided_p(r.t_stat, r.df);
    r.alpha0_t = safe_t(r.alpha0, fit.intercept_se(), s);
    r.alpha0_p = numerics::t_two_sided_p(r.alpha0_t, r.df);
    return r;
}

PeeseFit peese(std::span<const EffectEstimate> effects) {
    require_at_least(effects, 3, "peese");
    const std::size_t m = effects.size();
    std::vector<double> v(m), y(m), w(m);
    for (std::size_t i = 0; i < m; ++i) {
        v[i] = effects[i].variance;
        y[i] = effects[i].value;
        w[i] = 1.0 / v[i];
    }
    const numerics::WlsFit fit = numerics::wls_fit(v, y, w);
    return {fit.intercept(), fit.slope(), fit.intercept_se(), fit.df_residual};
}

PetPeeseResult pet_peese(std::span<const EffectEstimate> effects, double branch_alpha) {
    require_at_least(effects, 4, "pet_peese");
    const PetFit p = pet(effects);

    PetPeeseResult r;
    r.pet_t = p.t_stat;
    r.pet_p = p.p_value;
    r.pet_alpha0 = p.alpha0;
    const double tq = numerics::t_quantile(0.975, static_cast<double>(p.df));
    if (p.p_value >= branch_alpha) {
        r.branch = PetPeeseBranch::pet;
        r.estimate = p.alpha1;
        r.se = std::sqrt(std::max(0.0, p.cov[1][1]));
    } else {
        const PeeseFit f = peese(effects);
        r.branch = PetPeeseBranch::peese;
        r.estimate = f.gamma0;
        r.se = f.gamma0_se;
        r.peese_gamma1 = f.gamma1;
    }
    r.ci_low = r.estimate - tq * r.se;
    r.ci_high = r.estimate + tq * r.se;
    return r;
}

MetaResult PetPeeseResult::to_meta_result() const {
    MetaResult m;
    m.method = Method::pet_peese;
    m.estimate = estimate;
    m.se = se;
    m.ci_low = ci_low;
    m.ci_high = ci_high;
    m.diagnostics["branch_peese"] = branch == PetPeeseBranch::peese ? 1.0 : 0.0;
    m.diagnostics["pet_t"] = pet_t;
    m.diagnostics["pet_p"] = pet_p;
    m.diagnostics["pet_alpha0"] = pet_alpha0;
    if (peese_gamma1) m.diagnostics["peese_gamma1"] = *peese_gamma1;
    return m;
}

}  // namespace metabias
