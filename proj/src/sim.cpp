#include "metabias/sim.hpp"

#include "metabias/error.hpp"
#include "metabias/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>

namespace metabias::sim {

namespace {

constexpr double kVarianceMean = 100.0;
constexpr double kVarianceSd = 10.0;
constexpr double kVarianceFloor = 1.0;
constexpr double kUnequalControlRatio = 0.8;
constexpr int kIntegerDfTable = 2048;
constexpr int kMaxRegenerations = 100000;

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

int draw_arm_size(double delta, Rng& rng) {
    std::poisson_distribution<int> pois(delta);
    int n;
    do {
        n = pois(rng);
    } while (n < 2);
    return n;
}

double draw_study_variance(Rng& rng) {
    std::normal_distribution<double> norm(kVarianceMean, kVarianceSd);
    double v;
    do {
        v = norm(rng);
    } while (v < kVarianceFloor);
    return v;
}

double draw_sample_sd(double variance, int n, Rng& rng) {
    std::chi_squared_distribution<double> chi(static_cast<double>(n - 1));
    return std::sqrt(variance * chi(rng) / (n - 1));
}

}  // namespace

std::string_view variance_scenario_name(VarianceScenario v) noexcept {
    return v == VarianceScenario::unequal ? "unequal" : "equal";
}

VarianceScenario parse_variance_scenario(std::string_view s) {
    if (s == "equal") return VarianceScenario::equal;
    if (s == "unequal") return VarianceScenario::unequal;
    throw Error(ErrorCode::ParseError, "unknown variance scenario '" + std::string(s) + "'");
}

void SimConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::ConfigError, what); };
    if (m < 2) fail("m must be >= 2");
    if (!(delta > 0.0) || !std::isfinite(delta)) fail("delta must be positive and finite");
    if (!std::isfinite(eta)) fail("eta must be finite");
    if (!(tau2 >= 0.0) || !std::isfinite(tau2)) fail("tau2 must be finite and >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1)");
    if (!(pi_pub >= 0.0 && pi_pub <= 1.0)) fail("pi_pub must lie in [0,1]");
    if (replicates < 1) fail("replicates must be >= 1");
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    std::uint64_t state = seed;
    std::uint64_t a = splitmix64(state);
    state = a ^ (stream * 0xd1b54a32d192ed03ULL);
    std::uint64_t b = splitmix64(state);
    state = b ^ (substream * 0x8cb92ba72f3d8dd7ULL);
    std::uint64_t c = splitmix64(state);
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

double satterthwaite_df(double var0, int n0, double var1, int n1) {
    const double a0 = var0 / n0;
    const double a1 = var1 / n1;
    return (a0 + a1) * (a0 + a1) / (a0 * a0 / (n0 - 1) + a1 * a1 / (n1 - 1));
}

GeneratedStudy generate_study(const SimConfig& cfg, Rng& rng) {
    GeneratedStudy g;
    StudySummary& s = g.summary;
    s.n0 = draw_arm_size(cfg.delta, rng);
    s.n1 = draw_arm_size(cfg.delta, rng);

    std::normal_distribution<double> std_normal(0.0, 1.0);
    const double theta = cfg.tau2 > 0.0 ? std::sqrt(cfg.tau2) * std_normal(rng) : 0.0;
    const double s2 = draw_study_variance(rng);
    const double var1 = s2;
    const double var0 = cfg.variance_scenario == VarianceScenario::unequal ? kUnequalControlRatio * s2 : s2;

    s.mean1 = cfg.eta + theta + std::sqrt(var1 / s.n1) * std_normal(rng);
    s.mean0 = std::sqrt(var0 / s.n0) * std_normal(rng);
    s.sd1 = draw_sample_sd(var1, s.n1, rng);
    s.sd0 = draw_sample_sd(var0, s.n0, rng);

    if (cfg.variance_scenario == VarianceScenario::equal) {
        g.df_for_test = s.n0 + s.n1 - 2;
    } else {
        g.df_for_test = satterthwaite_df(s.sd0 * s.sd0, s.n0, s.sd1 * s.sd1, s.n1);
    }
    return g;
}

CriticalValues::CriticalValues(double alpha) : alpha_(alpha), integer_table_(kIntegerDfTable + 1, 0.0) {}

double CriticalValues::operator()(double df) const {
    const double r = std::round(df);
    if (r == df && r >= 1.0 && r <= kIntegerDfTable) {
        double& slot = integer_table_[static_cast<std::size_t>(r)];
        if (slot == 0.0) slot = numerics::t_quantile(1.0 - alpha_ / 2.0, df);
        return slot;
    }
    return numerics::t_quantile(1.0 - alpha_ / 2.0, df);
}

bool is_significant(const GeneratedStudy& study, const CriticalValues& crit) {
    const StudySummary& s = study.summary;
    const double d = (s.mean1 - s.mean0) / pooled_sd(s);
    const double t = d * std::sqrt(static_cast<double>(s.n1) * s.n0 / (s.n1 + s.n0));
    return t > crit(study.df_for_test);
}

bool apply_selection(GeneratedStudy& study, const SimConfig& cfg, Rng& rng, const CriticalValues& crit) {
    study.significant = is_significant(study, crit);
    if (study.significant) {
        study.published = true;
    } else {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        study.published = unif(rng) <= 1.0 - cfg.pi_pub;
    }
    return study.published;
}

bool apply_selection(GeneratedStudy& study, const SimConfig& cfg, Rng& rng) {
    return apply_selection(study, cfg, rng, CriticalValues(cfg.alpha));
}

double pi_pub_for_rate(double p_sig, double target_rate) {
    if (!(target_rate > 0.0 && target_rate <= 1.0)) {
        throw Error(ErrorCode::DomainError, "target publishing rate must lie in (0,1]");
    }
    if (p_sig > target_rate) {
        throw Error(ErrorCode::TargetUnreachable, "significant studies alone exceed the target publishing rate");
    }
    if (p_sig >= 1.0) return 0.0;
    return std::clamp(1.0 - (target_rate - p_sig) / (1.0 - p_sig), 0.0, 1.0);
}

double estimate_p_significant(const SimConfig& cfg, int calib_reps, Rng& rng) {
    if (calib_reps < 1) throw Error(ErrorCode::DomainError, "calib_reps must be >= 1");
    const CriticalValues crit(cfg.alpha);
    const long total = static_cast<long>(calib_reps) * cfg.m;
    long hits = 0;
    for (long i = 0; i < total; ++i) {
        if (is_significant(generate_study(cfg, rng), crit)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

double calibrate_pi_pub(const SimConfig& cfg, double target_rate, int calib_reps, Rng& rng) {
    return pi_pub_for_rate(estimate_p_significant(cfg, calib_reps, rng), target_rate);
}

double true_smd(double eta, VarianceScenario scenario) {
    static std::mutex mu;
    static std::map<int, double> cache;  // E[1/S_pool] per scenario
    const int key = scenario == VarianceScenario::unequal ? 1 : 0;
    {
        std::lock_guard lock(mu);
        if (auto it = cache.find(key); it != cache.end()) return eta * it->second;
    }
    // Pooled population variance of the two arms: S^2 (equal) or
    // (0.8 S^2 + S^2)/2 (unequal).
    const double pool_factor = key == 1 ? 0.5 * (1.0 + kUnequalControlRatio) : 1.0;
    const double lo = std::max(kVarianceFloor, kVarianceMean - 14.0 * kVarianceSd);
    const double hi = kVarianceMean + 14.0 * kVarianceSd;
    const int n = 40000;  // Simpson panels (even)
    const double h = (hi - lo) / n;
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double v = lo + i * h;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        const double dens = numerics::norm_pdf((v - kVarianceMean) / kVarianceSd);
        num += w * dens / std::sqrt(pool_factor * v);
        den += w * dens;
    }
    const double mean_inv_sd = num / den;
    std::lock_guard lock(mu);
    cache.emplace(key, mean_inv_sd);
    return eta * mean_inv_sd;
}

MetaSample generate_meta(const SimConfig& cfg, Rng& rng, const CriticalValues& crit) {
    MetaSample out;
    out.truth = true_smd(cfg.eta, cfg.variance_scenario);
    for (int attempt = 0; attempt <= kMaxRegenerations; ++attempt) {
        out.published.clear();
        out.all.clear();
        for (int i = 0; i < cfg.m; ++i) {
            GeneratedStudy g = generate_study(cfg, rng);
            apply_selection(g, cfg, rng, crit);
            EffectEstimate e = compute_effect(g.summary, cfg.effect_kind);
            e.df = g.df_for_test;
            out.all.push_back(e);
            if (g.published) out.published.push_back(e);
        }
        if (out.published.size() >= 3) return out;
        ++out.regenerations;
    }
    throw Error(ErrorCode::InsufficientStudies, "generate_meta: fewer than 3 studies published after regeneration cap");
}

MetaSample generate_meta(const SimConfig& cfg, Rng& rng) { return generate_meta(cfg, rng, CriticalValues(cfg.alpha)); }

}  // namespace metabias::sim
