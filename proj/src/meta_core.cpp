#include "metabias/meta_core.hpp"

#include "metabias/error.hpp"
#include "metabias/kernels.hpp"
#include "metabias/numerics.hpp"

#include <algorithm>
#include <cmath>

namespace metabias {

std::string_view method_name(Method m) noexcept {
    switch (m) {
        case Method::fixed: return "fixed";
        case Method::dl_random: return "dl_random";
        case Method::copas: return "copas";
        case Method::p_uniform: return "p_uniform";
        case Method::pet_peese: return "pet_peese";
        case Method::trim_fill: return "trim_fill";
        case Method::limit_meta: return "limit_meta";
    }
    return "unknown";
}

Method parse_method(std::string_view s) {
    for (Method m : kAllMethods) {
        if (method_name(m) == s) return m;
    }
    throw Error(ErrorCode::ParseError, "unknown method '" + std::string(s) + "'");
}

bool MetaResult::has_flag(std::string_view f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

namespace {

struct Pooled {
    double estimate;
    double se;
    double q;
    double sum_w;
    double sum_ww;
};

Pooled pool(std::span<const EffectEstimate> effects, double tau2) {
    const std::size_t m = effects.size();
    std::vector<double> y(m), w(m);
    for (std::size_t i = 0; i < m; ++i) {
        if (!(effects[i].variance > 0.0)) throw Error(ErrorCode::DomainError, "effect variances must be positive");
        y[i] = effects[i].value;
        w[i] = 1.0 / (effects[i].variance + tau2);
    }
    const auto tot = kernels::weighted_totals(y, y, w);
    const double est = tot.sum_wy / tot.sum_w;
    const auto mom = kernels::centered_moments(y, y, w, est, est);
    return {est, 1.0 / std::sqrt(tot.sum_w), mom.syy, tot.sum_w, tot.sum_ww};
}

void set_normal_ci(MetaResult& r) {
    r.ci_low = r.estimate - numerics::kZ975 * r.se;
    r.ci_high = r.estimate + numerics::kZ975 * r.se;
}

}  // namespace

MetaResult fixed_effects(std::span<const EffectEstimate> effects) {
    if (effects.empty()) throw Error(ErrorCode::EmptyInput, "fixed_effects needs at least one study");
    const Pooled p = pool(effects, 0.0);
    MetaResult r;
    r.method = Method::fixed;
    r.estimate = p.estimate;
    r.se = p.se;
    r.tau2 = 0.0;
    r.q_stat = p.q;
    set_normal_ci(r);
    r.diagnostics["k"] = static_cast<double>(effects.size());
    return r;
}

double dl_tau2(std::span<const EffectEstimate> effects) {
    if (effects.size() < 2) return 0.0;
    const Pooled fe = pool(effects, 0.0);
    const double c = fe.sum_w - fe.sum_ww / fe.sum_w;
    if (!(c > 0.0)) return 0.0;
    return std::max(0.0, (fe.q - static_cast<double>(effects.size() - 1)) / c);
}

MetaResult dl_random_effects(std::span<const EffectEstimate> effects) {
    if (effects.empty()) throw Error(ErrorCode::EmptyInput, "dl_random_effects needs at least one study");
    if (effects.size() == 1) {
        MetaResult r = fixed_effects(effects);
        r.method = Method::dl_random;
        r.flags.emplace_back("single-study");
        return r;
    }
    const Pooled fe = pool(effects, 0.0);
    const double c = fe.sum_w - fe.sum_ww / fe.sum_w;
    const double tau2 = c > 0.0 ? std::max(0.0, (fe.q - static_cast<double>(effects.size() - 1)) / c) : 0.0;
    const Pooled re = tau2 > 0.0 ? pool(effects, tau2) : fe;

    MetaResult r;
    r.method = Method::dl_random;
    r.estimate = re.estimate;
    r.se = re.se;
    r.tau2 = tau2;
    r.q_stat = fe.q;
    set_normal_ci(r);
    r.diagnostics["k"] = static_cast<double>(effects.size());
    r.diagnostics["fixed_estimate"] = fe.estimate;
    return r;
}

}  // namespace metabias
