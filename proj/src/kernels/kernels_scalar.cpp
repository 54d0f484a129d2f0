#include "metabias/kernels.hpp"

#include <cstddef>

namespace metabias::kernels::scalar {

WeightedTotals weighted_totals(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    WeightedTotals t;
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n; ++i) {
        t.sum_w += w[i];
        t.sum_wx += w[i] * x[i];
        t.sum_wy += w[i] * y[i];
        t.sum_ww += w[i] * w[i];
    }
    return t;
}

CenteredMoments centered_moments(std::span<const double> x, std::span<const double> y, std::span<const double> w,
                                 double xbar, double ybar) {
    CenteredMoments m;
    const std::size_t n = w.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - xbar;
        const double dy = y[i] - ybar;
        m.sxx += w[i] * dx * dx;
        m.sxy += w[i] * dx * dy;
        m.syy += w[i] * dy * dy;
    }
    return m;
}

}  // namespace metabias::kernels::scalar
