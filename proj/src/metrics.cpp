#include "metabias/metrics.hpp"

#include "metabias/error.hpp"

namespace metabias {

void MetricsAccumulator::add(double estimate, double ci_low, double ci_high, double truth) {
    const double err = estimate - truth;
    ++n;
    sum_err += err;
    sum_sq_err += err * err;
    if (ci_low <= truth && truth <= ci_high) ++covered;
    if (ci_low > 0.0 || ci_high < 0.0) ++excludes_zero;
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
    n += other.n;
    failures += other.failures;
    sum_err += other.sum_err;
    sum_sq_err += other.sum_sq_err;
    covered += other.covered;
    excludes_zero += other.excludes_zero;
}

ScenarioMetrics MetricsAccumulator::finish(Method method) const {
    if (n == 0) throw Error(ErrorCode::AllFailed, "every replicate failed for " + std::string(method_name(method)));
    ScenarioMetrics s;
    s.method = method;
    const double dn = static_cast<double>(n);
    s.bias = sum_err / dn;
    s.amse = sum_sq_err / dn;
    s.coverage = static_cast<double>(covered) / dn;
    s.power = static_cast<double>(excludes_zero) / dn;
    s.n_replicates_used = n;
    s.n_failures = failures;
    return s;
}

ScenarioMetrics aggregate(std::span<const std::optional<MetaResult>> results, double truth) {
    MetricsAccumulator acc;
    std::optional<Method> method;
    for (const auto& r : results) {
        if (!r) {
            acc.add_failure();
            continue;
        }
        method = r->method;
        acc.add(r->estimate, r->ci_low, r->ci_high, truth);
    }
    return acc.finish(method.value_or(Method::dl_random));
}

}  // namespace metabias
