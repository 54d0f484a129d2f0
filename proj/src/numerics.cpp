#include "metabias/numerics.hpp"

#include "metabias/error.hpp"
#include "metabias/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace metabias::numerics {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = 1e-300;

// Below this x, erfc(-x/sqrt2) drifts into subnormals; switch to the
// asymptotic expansion of the Mills ratio.
constexpr double kLogCdfAsymptotic = -35.0;

double log_cdf_asymptotic(double x) {
    // x << 0: Phi(x) = phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
    const double x2 = x * x;
    const double inv = 1.0 / x2;
    const double series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
    return -0.5 * x2 - kLogSqrt2Pi - std::log(-x) + std::log(series);
}

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double x, double a, double b) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 20000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= 1e-16) break;
    }
    return h;
}

double gamma_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 100000; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) <= 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double t_sf(double x, double df) {
    // Upper tail P(T > x).
    if (x == 0.0) return 0.5;
    if (!std::isfinite(df) || df > 1e12) return norm_sf(x);
    const double x2 = x * x;
    double two_tail;
    if (x2 > df) {
        two_tail = beta_inc(df / (df + x2), 0.5 * df, 0.5);
    } else {
        two_tail = 1.0 - beta_inc(x2 / (df + x2), 0.5, 0.5 * df);
    }
    return x > 0 ? 0.5 * two_tail : 1.0 - 0.5 * two_tail;
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::DomainError, what);
}

}  // namespace

double norm_pdf(double x) noexcept { return std::exp(-0.5 * x * x - kLogSqrt2Pi); }

double norm_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_sf(double x) noexcept { return 0.5 * std::erfc(x * kInvSqrt2); }

double log_norm_cdf(double x) noexcept {
    if (x > 0.0) return std::log1p(-norm_sf(x));
    if (x < kLogCdfAsymptotic) return log_cdf_asymptotic(x);
    return std::log(norm_cdf(x));
}

double log_norm_sf(double x) noexcept { return log_norm_cdf(-x); }

double norm_quantile(double p) {
    require(p > 0.0 && p < 1.0, "norm_quantile requires p in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num =
            (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
              133.14166789178437745) * r + 3.387132872796366608);
        const double den =
            (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
              42.313330701600911252) * r + 1.0);
        return q * num / den;
    }
    double r = std::sqrt(-std::log(q < 0 ? p : 1.0 - p));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        const double num =
            (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734);
        const double den =
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
        val = num / den;
    } else {
        r -= 5.0;
        const double num =
            (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772);
        const double den =
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
        val = num / den;
    }
    return q < 0 ? -val : val;
}

double gamma_p(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gamma_p requires a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x < a + 1.0) return gamma_series(a, x);
    return 1.0 - gamma_cf(a, x);
}

double gamma_q(double a, double x) {
    require(a > 0.0 && x >= 0.0, "gamma_q requires a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - gamma_series(a, x);
    return gamma_cf(a, x);
}

double gamma_cdf(double x, double shape, double scale) {
    require(shape > 0.0 && scale > 0.0, "gamma_cdf requires shape, scale > 0");
    if (x <= 0.0) return 0.0;
    return gamma_p(shape, x / scale);
}

double gamma_quantile(double p, double shape, double scale) {
    require(p >= 0.0 && p <= 1.0, "gamma_quantile requires p in [0,1]");
    require(shape > 0.0 && scale > 0.0, "gamma_quantile requires shape, scale > 0");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    const double a = shape;
    const double lg = std::lgamma(a);
    const double q = 1.0 - p;
    // f(x) = P(a,x) - p, evaluated on the tail that keeps precision.
    auto f = [&](double x) { return p <= 0.5 ? gamma_p(a, x) - p : q - gamma_q(a, x); };

    double x;
    const double z = norm_quantile(p);
    const double wh = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * std::sqrt(a));
    if (a > 0.5 && wh > 0.0) {
        x = a * wh * wh * wh;
    } else {
        x = std::exp((std::log(p) + std::lgamma(a + 1.0)) / a);
    }
    if (!(x > 0.0) || !std::isfinite(x)) x = a;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 300; ++it) {
        const double fx = f(x);
        if (fx == 0.0) break;
        if (fx < 0.0) lo = x; else hi = x;
        const double dens = std::exp((a - 1.0) * std::log(x) - x - lg);
        double next = x - fx / dens;
        if (!std::isfinite(next) || next <= lo || next >= hi) {
            next = std::isinf(hi) ? std::max(2.0 * x, x + 1.0) : 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) <= 1e-15 * std::max(x, 1e-300)) {
            x = next;
            break;
        }
        x = next;
    }
    return x * scale;
}

double beta_inc(double x, double a, double b) {
    require(a > 0.0 && b > 0.0, "beta_inc requires a, b > 0");
    require(x >= 0.0 && x <= 1.0, "beta_inc requires x in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(x, a, b) / a;
    return 1.0 - front * beta_cf(1.0 - x, b, a) / b;
}

double t_pdf(double x, double df) {
    require(df > 0.0, "t_pdf requires df > 0");
    if (df > 1e12) return norm_pdf(x);
    return std::exp(std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * std::numbers::pi) -
                    0.5 * (df + 1.0) * std::log1p(x * x / df));
}

double t_cdf(double x, double df) {
    require(df > 0.0, "t_cdf requires df > 0");
    if (std::isnan(x)) return x;
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    return t_sf(-x, df);
}

double t_two_sided_p(double t, double df) {
    require(df > 0.0, "t_two_sided_p requires df > 0");
    if (std::isnan(t)) return t;
    if (std::isinf(t)) return 0.0;
    return std::min(1.0, 2.0 * t_sf(std::fabs(t), df));
}

double t_quantile(double p, double df) {
    require(p > 0.0 && p < 1.0, "t_quantile requires p in (0,1)");
    require(df > 0.0, "t_quantile requires df > 0");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -t_quantile(1.0 - p, df);
    if (df > 1e12) return norm_quantile(p);

    const double q = 1.0 - p;
    // Cornish-Fisher start, pulled back when df is too small for the series.
    const double z = norm_quantile(p);
    const double z2 = z * z;
    double x = z + (z2 + 1.0) * z / (4.0 * df) +
               ((5.0 * z2 + 16.0) * z2 + 3.0) * z / (96.0 * df * df) +
               (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / (384.0 * df * df * df);
    if (!std::isfinite(x) || x <= 0.0) x = z;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 400; ++it) {
        const double fx = q - t_sf(x, df);  // = cdf(x) - p
        if (fx == 0.0) break;
        if (fx < 0.0) lo = x; else hi = x;
        double next = x - fx / t_pdf(x, df);
        if (!std::isfinite(next) || next <= lo || next >= hi) {
            next = std::isinf(hi) ? 2.0 * x + 1.0 : 0.5 * (lo + hi);
        }
        if (std::fabs(next - x) <= 4.0 * kEps * (1.0 + std::fabs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

double WlsFit::intercept_se() const { return std::sqrt(std::max(0.0, covariance[0][0])); }
double WlsFit::slope_se() const { return std::sqrt(std::max(0.0, covariance[1][1])); }

WlsFit wls_fit(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
    if (x.size() != y.size() || x.size() != weights.size()) {
        throw Error(ErrorCode::LengthMismatch, "wls_fit: x, y and weights differ in length");
    }
    const std::size_t n = x.size();
    if (n < 3) throw Error(ErrorCode::InsufficientStudies, "wls_fit needs at least 3 points");
    bool distinct = false;
    bool any_weight = false;
    double x_ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
            throw Error(ErrorCode::DomainError, "wls_fit: weights must be finite and non-negative");
        }
        if (weights[i] == 0.0) continue;
        if (!any_weight) {
            any_weight = true;
            x_ref = x[i];
        } else if (x[i] != x_ref) {
            distinct = true;
        }
    }
    if (!any_weight) throw Error(ErrorCode::DomainError, "wls_fit: all weights are zero");
    if (!distinct) throw Error(ErrorCode::SingularDesign, "wls_fit: design has a single distinct x");

    const auto tot = kernels::weighted_totals(x, y, weights);
    const double xbar = tot.sum_wx / tot.sum_w;
    const double ybar = tot.sum_wy / tot.sum_w;
    const auto mom = kernels::centered_moments(x, y, weights, xbar, ybar);
    if (!(mom.sxx > 1e-24 * (mom.sxx + tot.sum_w * xbar * xbar))) {
        throw Error(ErrorCode::SingularDesign, "wls_fit: x has no weighted spread");
    }

    WlsFit fit;
    const double slope = mom.sxy / mom.sxx;
    const double intercept = ybar - slope * xbar;
    fit.coefficients = {intercept, slope};
    fit.df_residual = static_cast<int>(n) - 2;

    double rss = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - intercept - slope * x[i];
        rss += weights[i] * r * r;
        scale += weights[i] * y[i] * y[i];
    }
    // Exact fits leave only rounding noise in the residuals.
    if (rss <= 1e-26 * scale) rss = 0.0;
    fit.residual_variance = rss / fit.df_residual;

    const double s2 = fit.residual_variance;
    fit.covariance[1][1] = s2 / mom.sxx;
    fit.covariance[0][0] = s2 * (1.0 / tot.sum_w + xbar * xbar / mom.sxx);
    fit.covariance[0][1] = fit.covariance[1][0] = -s2 * xbar / mom.sxx;
    return fit;
}

WlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
    std::vector<double> ones(x.size(), 1.0);
    return wls_fit(x, y, ones);
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double tol) {
    if (lo > hi) std::swap(lo, hi);
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (std::signbit(flo) == std::signbit(fhi) || std::isnan(flo) || std::isnan(fhi)) {
        throw Error(ErrorCode::NoBracket, "find_root: f has the same sign at both ends of the bracket");
    }
    for (int it = 0; it < 2000 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if (std::signbit(fm) == std::signbit(flo)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

bool expand_bracket(const std::function<double(double)>& f, double& lo, double& hi, int max_expansions) {
    double flo = f(lo);
    double fhi = f(hi);
    for (int k = 0; k <= max_expansions; ++k) {
        if (flo == 0.0 || fhi == 0.0 || std::signbit(flo) != std::signbit(fhi)) return true;
        if (k == max_expansions) break;
        const double width = hi - lo;
        lo -= 0.5 * width;
        hi += 0.5 * width;
        flo = f(lo);
        fhi = f(hi);
    }
    return false;
}

MaximizeResult maximize_bounded(const Objective& f, std::span<const double> lower, std::span<const double> upper,
                                std::span<const double> start, const MaximizeOptions& options) {
    const std::size_t k = start.size();
    if (lower.size() != k || upper.size() != k) {
        throw Error(ErrorCode::LengthMismatch, "maximize_bounded: bounds and start differ in length");
    }
    for (std::size_t j = 0; j < k; ++j) {
        require(std::isfinite(lower[j]) && std::isfinite(upper[j]) && lower[j] <= upper[j],
                "maximize_bounded: bounds must be finite and ordered");
    }

    std::vector<std::size_t> free;
    for (std::size_t j = 0; j < k; ++j) {
        if (upper[j] > lower[j]) free.push_back(j);
    }

    MaximizeResult result;
    std::vector<double> base(start.begin(), start.end());
    for (std::size_t j = 0; j < k; ++j) base[j] = std::clamp(base[j], lower[j], upper[j]);

    auto project = [&](std::vector<double>& p) {
        for (std::size_t j = 0; j < k; ++j) p[j] = std::clamp(p[j], lower[j], upper[j]);
    };
    // Minimize the negated objective; NaN counts as worst.
    auto eval = [&](const std::vector<double>& p) {
        ++result.evaluations;
        const double v = f(p);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : -v;
    };

    const std::size_t nf = free.size();
    if (nf == 0) {
        result.argmax = base;
        result.value = -eval(base);
        result.converged = true;
        return result;
    }

    // Nelder-Mead from `base`; returns true when the simplex collapsed below
    // the tolerance. Leaves the best vertex in simplex[0].
    std::vector<std::vector<double>> simplex;
    std::vector<double> values(nf + 1);
    std::vector<std::size_t> order(nf + 1);
    std::vector<double> centroid(k), trial(k), trial2(k);
    const auto point_along = [&](std::vector<double>& out, const std::vector<double>& from,
                                 const std::vector<double>& to, double t) {
        for (std::size_t j = 0; j < k; ++j) out[j] = from[j] + t * (to[j] - from[j]);
        project(out);
    };
    const auto run_simplex = [&]() -> bool {
        simplex.assign(nf + 1, base);
        for (std::size_t v = 0; v < nf; ++v) {
            const std::size_t j = free[v];
            double step = options.initial_step.size() == k ? options.initial_step[j] : 0.1 * (upper[j] - lower[j]);
            if (step == 0.0) step = 0.1 * (upper[j] - lower[j]);
            double coord = base[j] + step;
            if (coord > upper[j]) coord = base[j] - step;
            simplex[v + 1][j] = std::clamp(coord, lower[j], upper[j]);
        }
        for (std::size_t v = 0; v <= nf; ++v) values[v] = eval(simplex[v]);

        while (true) {
            for (std::size_t v = 0; v <= nf; ++v) order[v] = v;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
            {
                std::vector<std::vector<double>> s2(nf + 1);
                std::vector<double> v2(nf + 1);
                for (std::size_t v = 0; v <= nf; ++v) {
                    s2[v] = std::move(simplex[order[v]]);
                    v2[v] = values[order[v]];
                }
                simplex = std::move(s2);
                values = std::move(v2);
            }

            double diameter = 0.0;
            for (std::size_t v = 1; v <= nf; ++v) {
                for (std::size_t j : free) diameter = std::max(diameter, std::fabs(simplex[v][j] - simplex[0][j]));
            }
            if (diameter < options.tolerance) return true;
            if (result.evaluations >= options.max_evaluations) return false;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t v = 0; v < nf; ++v) {
                for (std::size_t j = 0; j < k; ++j) centroid[j] += simplex[v][j];
            }
            for (std::size_t j = 0; j < k; ++j) centroid[j] /= static_cast<double>(nf);

            auto& worst = simplex[nf];
            point_along(trial, centroid, worst, -1.0);  // reflection
            const double fr = eval(trial);

            if (fr < values[0]) {
                point_along(trial2, centroid, worst, -2.0);  // expansion
                const double fe = eval(trial2);
                if (fe < fr) {
                    worst = trial2;
                    values[nf] = fe;
                } else {
                    worst = trial;
                    values[nf] = fr;
                }
                continue;
            }
            if (fr < values[nf - 1]) {
                worst = trial;
                values[nf] = fr;
                continue;
            }
            if (fr < values[nf]) {
                point_along(trial2, centroid, trial, 0.5);  // outside contraction
                const double fc = eval(trial2);
                if (fc <= fr) {
                    worst = trial2;
                    values[nf] = fc;
                    continue;
                }
            } else {
                point_along(trial2, centroid, worst, 0.5);  // inside contraction
                const double fc = eval(trial2);
                if (fc < values[nf]) {
                    worst = trial2;
                    values[nf] = fc;
                    continue;
                }
            }
            for (std::size_t v = 1; v <= nf; ++v) {  // shrink toward best
                point_along(simplex[v], simplex[0], simplex[v], 0.5);
                values[v] = eval(simplex[v]);
            }
        }
    };

    // A collapsed simplex can stall on a face of the box or a ridge, so
    // restart around the best point until a restart no longer improves it.
    constexpr int kMaxRestarts = 10;
    double best = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart <= kMaxRestarts; ++restart) {
        const bool collapsed = run_simplex();
        const double improvement = best - values[0];
        base = simplex[0];
        best = std::min(best, values[0]);
        if (!collapsed) break;
        if (restart > 0 && !(improvement > options.tolerance * (1.0 + std::fabs(best)))) {
            result.converged = true;
            break;
        }
    }

    result.argmax = base;
    result.value = -best;
    return result;
}

}  // namespace metabias::numerics
