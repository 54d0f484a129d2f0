#include "metabias/puniform.hpp"

#include "metabias/error.hpp"
#include "metabias/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace metabias {

namespace {

constexpr int kMaxExpansions = 50;

double log_conditional_p(double y, double value, double se, double crit) {
    return numerics::log_norm_sf((value - y) / se) - numerics::log_norm_sf((crit - y) / se);
}

// Finds y with L(y) = target. L decreases in y, so the bracket grows downward
// while L(lo) < target and upward while L(hi) > target.
double solve_level(const std::function<double(double)>& l_stat, double target, double center, double half_width) {
    auto f = [&](double y) { return l_stat(y) - target; };
    double lo = center - half_width;
    double hi = center + half_width;
    double step = half_width;
    int expansions = 0;
    while (f(lo) < 0.0) {
        if (++expansions > kMaxExpansions) throw Error(ErrorCode::EstimateAtBoundary, "p_uniform: no lower bracket");
        hi = lo;
        step *= 2.0;
        lo -= step;
    }
    step = half_width;
    expansions = 0;
    while (f(hi) > 0.0) {
        if (++expansions > kMaxExpansions) throw Error(ErrorCode::EstimateAtBoundary, "p_uniform: no upper bracket");
        lo = hi;
        step *= 2.0;
        hi += step;
    }
    const double tol = 1e-12 * std::max(1.0, std::fabs(lo) + std::fabs(hi));
    return numerics::find_root(f, lo, hi, tol);
}

}  // namespace

double conditional_p(double y, const EffectEstimate& effect, double crit) {
    if (effect.value < crit) throw Error(ErrorCode::NotSignificant, "conditional_p: effect below critical value");
    return std::exp(log_conditional_p(y, effect.value, effect.se(), crit));
}

double smd_critical_value(const EffectEstimate& effect, double alpha) {
    const double n1 = effect.n1;
    const double n0 = effect.n0;
    if (!(n1 > 0 && n0 > 0)) throw Error(ErrorCode::DomainError, "p_uniform needs arm sizes to map critical values");
    return numerics::t_quantile(1.0 - alpha / 2.0, effect.df) / std::sqrt(n1 * n0 / (n1 + n0));
}

double l_statistic(double y, std::span<const EffectEstimate> significant, std::span<const double> crit) {
    double sum = 0.0;
    for (std::size_t i = 0; i < significant.size(); ++i) {
        sum -= log_conditional_p(y, significant[i].value, significant[i].se(), crit[i]);
    }
    return sum;
}

PUniformResult p_uniform(std::span<const EffectEstimate> effects, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::DomainError, "p_uniform: alpha must lie in (0,1)");
    std::vector<EffectEstimate> sig;
    std::vector<double> crit;
    for (const auto& e : effects) {
        const double c = smd_critical_value(e, alpha);
        if (e.value >= c) {
            sig.push_back(e);
            crit.push_back(c);
        }
    }
    if (sig.empty()) throw Error(ErrorCode::NoSignificantStudies, "p_uniform: no significant studies");

    const MetaResult fe = fixed_effects(sig);
    double max_se = 0.0;
    for (const auto& e : sig) max_se = std::max(max_se, e.se());
    const double half_width = 10.0 * max_se;

    const auto l_stat = [&](double y) { return l_statistic(y, sig, crit); };
    const double k = static_cast<double>(sig.size());

    PUniformResult r;
    r.n_significant = static_cast<int>(sig.size());
    r.estimate = solve_level(l_stat, k, fe.estimate, half_width);
    r.ci_low = solve_level(l_stat, numerics::gamma_quantile(1.0 - alpha / 2.0, k, 1.0), fe.estimate, half_width);
    r.ci_high = solve_level(l_stat, numerics::gamma_quantile(alpha / 2.0, k, 1.0), fe.estimate, half_width);
    r.l_stat_at_estimate = l_stat(r.estimate);
    return r;
}

MetaResult PUniformResult::to_meta_result() const {
    MetaResult m;
    m.method = Method::p_uniform;
    m.estimate = estimate;
    m.ci_low = ci_low;
    m.ci_high = ci_high;
    // Intervals are gamma-quantile inversions, not estimate +- z se; report the
    // half-width equivalent for consumers that want an SE.
    m.se = (ci_high - ci_low) / (2.0 * numerics::kZ975);
    m.diagnostics["n_significant"] = n_significant;
    m.diagnostics["l_stat_at_estimate"] = l_stat_at_estimate;
    return m;
}

}  // namespace metabias
