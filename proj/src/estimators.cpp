#include "metabias/estimators.hpp"

#include "metabias/copas.hpp"
#include "metabias/limitmeta.hpp"
#include "metabias/petpeese.hpp"
#include "metabias/puniform.hpp"
#include "metabias/trimfill.hpp"

#include <cmath>

namespace metabias {

std::size_t min_studies(Method m) noexcept {
    switch (m) {
        case Method::fixed:
        case Method::dl_random:
        case Method::p_uniform: return 1;
        case Method::copas:
        case Method::trim_fill:
        case Method::limit_meta: return 3;
        case Method::pet_peese: return 4;
    }
    return 1;
}

MethodOutcome run_method(Method m, std::span<const EffectEstimate> effects, double alpha) {
    MethodOutcome out;
    out.method = m;
    try {
        if (effects.size() < min_studies(m)) {
            throw Error(ErrorCode::InsufficientStudies, std::string(method_name(m)) + " needs at least " +
                                                            std::to_string(min_studies(m)) + " studies");
        }
        switch (m) {
            case Method::fixed: out.result = fixed_effects(effects); break;
            case Method::dl_random: out.result = dl_random_effects(effects); break;
            case Method::copas: out.result = copas(effects); break;
            case Method::p_uniform: out.result = p_uniform(effects, alpha).to_meta_result(); break;
            case Method::pet_peese: out.result = pet_peese(effects).to_meta_result(); break;
            case Method::trim_fill: out.result = trim_and_fill(effects).pooled; break;
            case Method::limit_meta: out.result = limit_meta(effects).pooled; break;
        }
        if (out.result && !std::isfinite(out.result->estimate)) {
            out.result.reset();
            throw Error(ErrorCode::NoConvergence, "non-finite estimate");
        }
    } catch (const Error& e) {
        out.result.reset();
        out.error = e.code();
        out.message = e.what();
    }
    return out;
}

}  // namespace metabias
