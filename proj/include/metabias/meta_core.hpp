#pragma once

#include "metabias/effects.hpp"

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace metabias {

enum class Method { fixed, dl_random, copas, p_uniform, pet_peese, trim_fill, limit_meta };

inline constexpr Method kAllMethods[] = {Method::fixed,     Method::dl_random, Method::copas,     Method::p_uniform,
                                         Method::pet_peese, Method::trim_fill, Method::limit_meta};
/// The six estimators compared in the simulation study (fixed effects excluded).
inline constexpr Method kSimulationMethods[] = {Method::dl_random, Method::copas,     Method::p_uniform,
                                                Method::pet_peese, Method::trim_fill, Method::limit_meta};

std::string_view method_name(Method m) noexcept;
/// Throws ParseError on an unknown name.
Method parse_method(std::string_view s);

struct MetaResult {
    double estimate = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double tau2 = 0.0;
    double q_stat = 0.0;
    Method method = Method::fixed;
    std::map<std::string, double> diagnostics;
    std::vector<std::string> flags;

    bool has_flag(std::string_view f) const;
};

/// Inverse-variance pooled estimate with tau2 = 0.
MetaResult fixed_effects(std::span<const EffectEstimate> effects);

/// DerSimonian-Laird moment estimate of tau2 followed by re-weighted pooling
/// and a normal 95% interval. A single study falls back to fixed effects and
/// carries the "single-study" flag.
MetaResult dl_random_effects(std::span<const EffectEstimate> effects);

/// DL moment estimator of tau2 alone, clamped at zero.
double dl_tau2(std::span<const EffectEstimate> effects);

}  // namespace metabias
