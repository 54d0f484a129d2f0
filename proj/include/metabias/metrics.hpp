#pragma once

#include "metabias/meta_core.hpp"

#include <cstdint>
#include <optional>
#include <span>

namespace metabias {

struct ScenarioMetrics {
    Method method = Method::dl_random;
    double amse = 0.0;
    double bias = 0.0;
    double coverage = 0.0;
    double power = 0.0;  // share of intervals excluding zero
    double mean_published = 0.0;
    std::int64_t n_replicates_used = 0;
    std::int64_t n_failures = 0;
};

/// Sufficient statistics for ScenarioMetrics. Accumulators over disjoint
/// replicate sets merge by addition.
struct MetricsAccumulator {
    std::int64_t n = 0;
    std::int64_t failures = 0;
    double sum_err = 0.0;
    double sum_sq_err = 0.0;
    std::int64_t covered = 0;
    std::int64_t excludes_zero = 0;

    void add(double estimate, double ci_low, double ci_high, double truth);
    void add_failure() { ++failures; }
    void merge(const MetricsAccumulator& other);
    /// Throws AllFailed when no replicate succeeded.
    ScenarioMetrics finish(Method method) const;
};

/// Failures are represented by empty optionals and excluded from every
/// denominator. mean_published is left at 0 for the caller to fill in.
ScenarioMetrics aggregate(std::span<const std::optional<MetaResult>> results, double truth);

}  // namespace metabias
