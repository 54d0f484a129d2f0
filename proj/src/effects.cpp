#include "metabias/effects.hpp"

#include "metabias/error.hpp"

#include <cmath>
#include <string>

namespace metabias {

std::string_view effect_kind_name(EffectKind k) noexcept { return k == EffectKind::hedges_g ? "hedges_g" : "cohen_d"; }

EffectKind parse_effect_kind(std::string_view s) {
    if (s == "cohen_d" || s == "d") return EffectKind::cohen_d;
    if (s == "hedges_g" || s == "g") return EffectKind::hedges_g;
    throw Error(ErrorCode::ParseError, "unknown effect kind '" + std::string(s) + "'");
}

double EffectEstimate::se() const { return std::sqrt(variance); }

void validate(const StudySummary& s) {
    if (s.n1 < 2 || s.n0 < 2) throw Error(ErrorCode::DomainError, "each arm needs at least 2 subjects");
    if (!(s.sd1 > 0.0) || !(s.sd0 > 0.0)) throw Error(ErrorCode::DomainError, "arm SDs must be positive");
    if (!std::isfinite(s.mean1) || !std::isfinite(s.mean0) || !std::isfinite(s.sd1) || !std::isfinite(s.sd0)) {
        throw Error(ErrorCode::DomainError, "study summary has non-finite fields");
    }
}

double pooled_sd(const StudySummary& s) {
    const double num = (s.n1 - 1) * s.sd1 * s.sd1 + (s.n0 - 1) * s.sd0 * s.sd0;
    return std::sqrt(num / (s.n1 + s.n0 - 2));
}

double hedges_correction(int n1, int n0) noexcept { return 1.0 - 3.0 / (4.0 * (n1 + n0 - 2) - 1.0); }

EffectEstimate cohens_d(const StudySummary& s) {
    validate(s);
    const double n = s.n1 + s.n0;
    EffectEstimate e;
    e.value = (s.mean1 - s.mean0) / pooled_sd(s);
    e.variance = n / (static_cast<double>(s.n1) * s.n0) + e.value * e.value / (2.0 * n);
    e.kind = EffectKind::cohen_d;
    e.df = n - 2.0;
    e.n1 = s.n1;
    e.n0 = s.n0;
    return e;
}

EffectEstimate hedges_g(const StudySummary& s) {
    EffectEstimate e = cohens_d(s);
    const double j = hedges_correction(s.n1, s.n0);
    e.value *= j;
    e.variance *= j * j;
    e.kind = EffectKind::hedges_g;
    return e;
}

EffectEstimate compute_effect(const StudySummary& s, EffectKind kind) {
    return kind == EffectKind::hedges_g ? hedges_g(s) : cohens_d(s);
}

}  // namespace metabias
