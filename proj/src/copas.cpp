#include "metabias/copas.hpp"

#include "metabias/error.hpp"
#include "metabias/numerics.hpp"
#include "metabias/petpeese.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace metabias {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kRhoBound = 0.9999;
const double kLogUnderflow = std::log(1e-300);

// Per-study quantities that do not depend on (y, tau2, rho).
struct SelectionData {
    std::vector<double> y;
    std::vector<double> var;
    std::vector<double> s;
    std::vector<double> u;
    std::vector<double> log_phi_u;
};

SelectionData prepare(std::span<const EffectEstimate> effects, double a1, double a2) {
    SelectionData d;
    const std::size_t m = effects.size();
    d.y.resize(m);
    d.var.resize(m);
    d.s.resize(m);
    d.u.resize(m);
    d.log_phi_u.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        d.y[i] = effects[i].value;
        d.var[i] = effects[i].variance;
        if (!(d.var[i] > 0.0)) throw Error(ErrorCode::DomainError, "copas: variances must be positive");
        d.s[i] = std::sqrt(d.var[i]);
        d.u[i] = a1 + a2 / d.s[i];
        d.log_phi_u[i] = numerics::log_norm_cdf(d.u[i]);
        if (d.log_phi_u[i] < kLogUnderflow) {
            throw Error(ErrorCode::NumericUnderflow, "copas: selection probability below 1e-300");
        }
    }
    return d;
}

// Accepts slightly negative tau2 so finite differences can straddle zero;
// returns -inf once some total variance is non-positive.
double loglik(const SelectionData& d, double y, double tau2, double rho) {
    double sum = 0.0;
    const std::size_t m = d.y.size();
    for (std::size_t i = 0; i < m; ++i) {
        const double sig2 = tau2 + d.var[i];
        if (!(sig2 > 0.0)) return -std::numeric_limits<double>::infinity();
        const double sig = std::sqrt(sig2);
        const double z = (d.y[i] - y) / sig;
        const double rt = rho * d.s[i] / sig;
        const double v = (d.u[i] + rt * z) / std::sqrt(1.0 - rt * rt);
        sum += -0.5 * z * z - kLogSqrt2Pi - std::log(sig) + numerics::log_norm_cdf(v) - d.log_phi_u[i];
    }
    return sum;
}

double sample_variance(const std::vector<double>& y) {
    const double n = static_cast<double>(y.size());
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    return ss / (n - 1.0);
}

// SE of the first parameter from the inverse observed information. Parameters
// sitting on (or within one step of) a bound are held fixed.
double observed_info_se(const SelectionData& d, const std::array<double, 3>& theta, const std::array<double, 3>& lower,
                        const std::array<double, 3>& upper) {
    std::array<double, 3> h{};
    std::array<std::size_t, 3> idx{};
    std::size_t k = 0;
    for (std::size_t j = 0; j < 3; ++j) {
        h[j] = 1e-4 * (1.0 + std::fabs(theta[j]));
        if (j == 0 || (theta[j] - h[j] >= lower[j] && theta[j] + h[j] <= upper[j])) idx[k++] = j;
    }
    auto f = [&](const std::array<double, 3>& t) { return loglik(d, t[0], t[1], t[2]); };
    const double f0 = f(theta);

    std::array<std::array<double, 3>, 3> info{};  // negative Hessian over the free parameters
    for (std::size_t a = 0; a < k; ++a) {
        const std::size_t j = idx[a];
        auto tp = theta, tm = theta;
        tp[j] += h[j];
        tm[j] -= h[j];
        info[a][a] = -(f(tp) - 2.0 * f0 + f(tm)) / (h[j] * h[j]);
        for (std::size_t b = 0; b < a; ++b) {
            const std::size_t l = idx[b];
            auto tpp = theta, tpm = theta, tmp = theta, tmm = theta;
            tpp[j] += h[j]; tpp[l] += h[l];
            tpm[j] += h[j]; tpm[l] -= h[l];
            tmp[j] -= h[j]; tmp[l] += h[l];
            tmm[j] -= h[j]; tmm[l] -= h[l];
            info[a][b] = info[b][a] = -(f(tpp) - f(tpm) - f(tmp) + f(tmm)) / (4.0 * h[j] * h[l]);
        }
    }

    // Cholesky of the information; the (0,0) element of its inverse is the
    // squared norm of L^-1 e_0.
    std::array<std::array<double, 3>, 3> chol{};
    bool pd = true;
    for (std::size_t a = 0; a < k && pd; ++a) {
        for (std::size_t b = 0; b <= a; ++b) {
            double sum = info[a][b];
            for (std::size_t c = 0; c < b; ++c) sum -= chol[a][c] * chol[b][c];
            if (a == b) {
                if (!(sum > 0.0) || !std::isfinite(sum)) {
                    pd = false;
                    break;
                }
                chol[a][a] = std::sqrt(sum);
            } else {
                chol[a][b] = sum / chol[b][b];
            }
        }
    }
    if (pd) {
        std::array<double, 3> x{};
        for (std::size_t a = 0; a < k; ++a) {
            double sum = a == 0 ? 1.0 : 0.0;
            for (std::size_t c = 0; c < a; ++c) sum -= chol[a][c] * x[c];
            x[a] = sum / chol[a][a];
        }
        double var = 0.0;
        for (std::size_t a = 0; a < k; ++a) var += x[a] * x[a];
        return std::sqrt(var);
    }
    if (info[0][0] > 0.0 && std::isfinite(info[0][0])) return 1.0 / std::sqrt(info[0][0]);
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double copas_loglik(double y, double tau2, double rho, double a1, double a2, std::span<const EffectEstimate> effects) {
    if (!(tau2 >= 0.0)) throw Error(ErrorCode::DomainError, "copas_loglik: tau2 must be >= 0");
    if (!(rho > -1.0 && rho < 1.0)) throw Error(ErrorCode::DomainError, "copas_loglik: rho must lie in (-1,1)");
    return loglik(prepare(effects, a1, a2), y, tau2, rho);
}

double re_loglik(double y, double tau2, std::span<const EffectEstimate> effects) {
    double sum = 0.0;
    for (const auto& e : effects) {
        const double sig2 = e.variance + tau2;
        const double r = e.value - y;
        sum += -0.5 * (r * r / sig2 + std::log(sig2)) - kLogSqrt2Pi;
    }
    return sum;
}

ReMlFit re_ml(std::span<const EffectEstimate> effects) {
    if (effects.empty()) throw Error(ErrorCode::EmptyInput, "re_ml needs at least one study");
    const std::size_t m = effects.size();
    auto weighted_mean = [&](double tau2, double& sum_w) {
        double sw = 0.0, swy = 0.0;
        for (const auto& e : effects) {
            const double w = 1.0 / (e.variance + tau2);
            sw += w;
            swy += w * e.value;
        }
        sum_w = sw;
        return swy / sw;
    };
    auto profile = [&](double tau2) {
        double sw;
        return re_loglik(weighted_mean(tau2, sw), tau2, effects);
    };

    ReMlFit fit;
    double tau2 = m > 1 ? dl_tau2(effects) : 0.0;
    double current = profile(tau2);
    for (int it = 1; it <= 500 && m > 1; ++it) {
        fit.iterations = it;
        double sw;
        const double mu = weighted_mean(tau2, sw);
        double sww = 0.0, score = 0.0;
        for (const auto& e : effects) {
            const double w = 1.0 / (e.variance + tau2);
            const double r = e.value - mu;
            sww += w * w;
            score += w * w * r * r - w;
        }
        double step = score / sww;
        double next = std::max(0.0, tau2 + step);
        double val = profile(next);
        // Fisher scoring can overshoot on flat likelihoods; halve until uphill.
        for (int half = 0; half < 60 && val < current; ++half) {
            step *= 0.5;
            next = std::max(0.0, tau2 + step);
            val = profile(next);
        }
        const bool done = std::fabs(next - tau2) <= 1e-14 * (1.0 + tau2);
        if (val >= current) {
            tau2 = next;
            current = val;
        }
        if (done || val < current) break;
    }
    double sw;
    fit.tau2 = tau2;
    fit.estimate = weighted_mean(tau2, sw);
    fit.se = 1.0 / std::sqrt(sw);
    fit.loglik = re_loglik(fit.estimate, tau2, effects);
    return fit;
}

CopasGrid default_copas_grid(std::span<const EffectEstimate> effects) {
    if (effects.empty()) return {};
    std::vector<double> se;
    se.reserve(effects.size());
    for (const auto& e : effects) se.push_back(e.se());
    std::sort(se.begin(), se.end());
    const std::size_t n = se.size();
    const double median = n % 2 == 1 ? se[n / 2] : 0.5 * (se[n / 2 - 1] + se[n / 2]);

    CopasGrid grid;
    for (double a1 : {-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0}) {
        for (double c : {0.0, 0.25, 0.5, 1.0, 2.0}) grid.emplace_back(a1, c * median);
    }
    return grid;
}

std::vector<CopasGridPoint> copas_fit_grid(std::span<const EffectEstimate> effects, const CopasGrid& grid) {
    if (effects.size() < 3) throw Error(ErrorCode::InsufficientStudies, "copas needs at least 3 studies");
    std::vector<CopasGridPoint> out;
    out.reserve(grid.size());
    if (grid.empty()) return out;

    const std::size_t m = effects.size();
    std::vector<double> y(m);
    double s_max = 0.0;
    double se_sum = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        y[i] = effects[i].value;
        s_max = std::max(s_max, effects[i].se());
        se_sum += effects[i].se();
    }
    const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
    const double range = *ymax_it - *ymin_it;
    const double tau2_upper = 10.0 * sample_variance(y);

    const std::array<double, 3> lower{*ymin_it - range - 10.0 * s_max, 0.0, -kRhoBound};
    const std::array<double, 3> upper{*ymax_it + range + 10.0 * s_max, tau2_upper, kRhoBound};

    const ReMlFit re = re_ml(effects);
    const std::array<double, 3> start{re.estimate, std::min(re.tau2, tau2_upper), 0.0};

    numerics::MaximizeOptions opt;
    const double mean_se = se_sum / static_cast<double>(m);
    opt.initial_step = {0.5 * mean_se, tau2_upper > 0.0 ? 0.1 * tau2_upper : 0.0, 0.5};

    for (const auto& [a1, a2] : grid) {
        CopasGridPoint pt;
        pt.a1 = a1;
        pt.a2 = a2;
        SelectionData d;
        try {
            d = prepare(effects, a1, a2);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NumericUnderflow) throw;
            pt.converged = false;
            pt.estimate = pt.se = std::numeric_limits<double>::quiet_NaN();
            out.push_back(pt);
            continue;
        }
        const auto objective = [&d](std::span<const double> t) { return loglik(d, t[0], t[1], t[2]); };
        const auto res = numerics::maximize_bounded(objective, lower, upper, start, opt);

        pt.estimate = res.argmax[0];
        pt.tau2 = res.argmax[1];
        pt.rho = res.argmax[2];
        pt.loglik = res.value;
        pt.converged = res.converged && std::isfinite(res.value);
        pt.se = observed_info_se(d, {pt.estimate, pt.tau2, pt.rho}, lower, upper);
        if (!std::isfinite(pt.se)) pt.converged = false;

        double n_unpub = 0.0;
        for (std::size_t i = 0; i < m; ++i) n_unpub += numerics::norm_sf(d.u[i]) / numerics::norm_cdf(d.u[i]);
        pt.n_unpublished = n_unpub;

        // Egger-type asymmetry test on standardized residuals: the regression
        // of (y_i - yhat)/sigma_i on 1/sigma_i, testing its intercept.
        std::vector<EffectEstimate> resid(effects.begin(), effects.end());
        for (std::size_t i = 0; i < m; ++i) {
            resid[i].value = d.y[i] - pt.estimate;
            resid[i].variance = d.var[i] + pt.tau2;
        }
        try {
            pt.asymmetry_p = pet(resid).alpha0_p;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularDesign) throw;
            pt.asymmetry_p = 1.0;  // equal SEs: no funnel to be asymmetric
        }
        out.push_back(pt);
    }
    return out;
}

MetaResult copas_select(std::span<const CopasGridPoint> points) {
    const CopasGridPoint* best = nullptr;
    auto better = [](const CopasGridPoint& a, const CopasGridPoint& b) {
        const double tol = 1e-12 * std::max(1.0, std::max(std::fabs(a.n_unpublished), std::fabs(b.n_unpublished)));
        if (std::fabs(a.n_unpublished - b.n_unpublished) > tol) return a.n_unpublished < b.n_unpublished;
        if (a.asymmetry_p != b.asymmetry_p) return a.asymmetry_p > b.asymmetry_p;
        return a.a2 < b.a2;
    };
    bool any_converged = false;
    for (const auto& p : points) {
        if (!p.converged) continue;
        any_converged = true;
        if (p.asymmetry_p > 0.1 && (best == nullptr || better(p, *best))) best = &p;
    }
    if (!any_converged) throw Error(ErrorCode::NoConvergedPoint, "copas: no grid point converged");

    bool adequate = best != nullptr;
    if (!adequate) {
        for (const auto& p : points) {
            if (p.converged && (best == nullptr || p.asymmetry_p > best->asymmetry_p)) best = &p;
        }
    }

    MetaResult r;
    r.method = Method::copas;
    r.estimate = best->estimate;
    r.se = best->se;
    r.ci_low = r.estimate - numerics::kZ975 * r.se;
    r.ci_high = r.estimate + numerics::kZ975 * r.se;
    r.tau2 = best->tau2;
    r.diagnostics["a1"] = best->a1;
    r.diagnostics["a2"] = best->a2;
    r.diagnostics["rho"] = best->rho;
    r.diagnostics["n_unpublished"] = best->n_unpublished;
    r.diagnostics["asymmetry_p"] = best->asymmetry_p;
    if (!adequate) r.flags.emplace_back("no-adequate-fit");
    return r;
}

MetaResult copas(std::span<const EffectEstimate> effects) {
    const auto points = copas_fit_grid(effects, default_copas_grid(effects));
    return copas_select(points);
}

}  // namespace metabias
