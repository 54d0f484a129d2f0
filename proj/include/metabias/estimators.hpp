#pragma once

#include "metabias/effects.hpp"
#include "metabias/error.hpp"
#include "metabias/meta_core.hpp"

#include <optional>
#include <span>
#include <string>

namespace metabias {

/// Result of one estimator on one dataset: either a MetaResult or the error
/// that stopped it. Soft failures never propagate as exceptions.
struct MethodOutcome {
    Method method = Method::fixed;
    std::optional<MetaResult> result;
    std::optional<ErrorCode> error;
    std::string message;

    bool ok() const noexcept { return result.has_value(); }
};

/// Minimum number of studies each method accepts.
std::size_t min_studies(Method m) noexcept;

MethodOutcome run_method(Method m, std::span<const EffectEstimate> effects, double alpha = 0.05);

}  // namespace metabias
