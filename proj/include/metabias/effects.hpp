#pragma once

#include <string_view>

namespace metabias {

/// Two-arm summary of one primary study. Arm 1 is treatment, arm 0 control.
struct StudySummary {
    int n1 = 0;
    int n0 = 0;
    double mean1 = 0.0;
    double mean0 = 0.0;
    double sd1 = 0.0;
    double sd0 = 0.0;
};

enum class EffectKind { cohen_d, hedges_g };

std::string_view effect_kind_name(EffectKind k) noexcept;
/// Accepts "cohen_d"/"d" and "hedges_g"/"g". Throws ParseError otherwise.
EffectKind parse_effect_kind(std::string_view s);

/// Standardized mean difference with its large-sample sampling variance.
struct EffectEstimate {
    double value = 0.0;
    double variance = 0.0;
    EffectKind kind = EffectKind::cohen_d;
    double df = 0.0;
    int n1 = 0;
    int n0 = 0;

    double se() const;
};

/// Throws DomainError when the summary violates n >= 2 per arm or sd > 0.
void validate(const StudySummary& s);

double pooled_sd(const StudySummary& s);
/// Small-sample correction factor J = 1 - 3 / (4 (n1 + n0 - 2) - 1).
double hedges_correction(int n1, int n0) noexcept;
EffectEstimate cohens_d(const StudySummary& s);
EffectEstimate hedges_g(const StudySummary& s);
EffectEstimate compute_effect(const StudySummary& s, EffectKind kind);

}  // namespace metabias
