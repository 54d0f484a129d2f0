#include "metabias/trimfill.hpp"

#include "metabias/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace metabias {

int estimate_l0(std::span<const EffectEstimate> effects, double center) {
    const std::size_t m = effects.size();
    if (m < 2) throw Error(ErrorCode::InsufficientStudies, "estimate_l0 needs at least 2 studies");

    std::vector<double> dist(m);
    for (std::size_t i = 0; i < m; ++i) dist[i] = std::fabs(effects[i].value - center);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });

    std::vector<double> rank(m);
    for (std::size_t i = 0; i < m;) {
        std::size_t j = i;
        while (j + 1 < m && dist[order[j + 1]] == dist[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }

    double t = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (effects[i].value > center) t += rank[i];
    }
    const double md = static_cast<double>(m);
    const double l0 = (4.0 * t - md * (md + 1.0)) / (2.0 * md - 1.0);
    return l0 > 0.0 ? static_cast<int>(std::floor(l0)) : 0;
}

TrimFillResult trim_and_fill(std::span<const EffectEstimate> effects, int max_iter) {
    const std::size_t m = effects.size();
    if (m < 3) throw Error(ErrorCode::InsufficientStudies, "trim_and_fill needs at least 3 studies");

    // Studies ordered by decreasing effect; trimming removes a prefix.
    std::vector<std::size_t> by_value(m);
    std::iota(by_value.begin(), by_value.end(), 0);
    std::stable_sort(by_value.begin(), by_value.end(),
                     [&](std::size_t a, std::size_t b) { return effects[a].value > effects[b].value; });
    auto center_without_top = [&](int l0) {
        std::vector<EffectEstimate> kept;
        kept.reserve(m);
        for (std::size_t r = static_cast<std::size_t>(l0); r < m; ++r) kept.push_back(effects[by_value[r]]);
        return dl_random_effects(kept).estimate;
    };

    TrimFillResult res;
    double center = dl_random_effects(effects).estimate;
    int l0 = estimate_l0(effects, center);
    res.iterations = 1;
    res.converged = false;
    while (res.iterations < max_iter) {
        // Keep at least one study to center on.
        l0 = std::min<int>(l0, static_cast<int>(m) - 1);
        center = center_without_top(l0);
        const int next = estimate_l0(effects, center);
        ++res.iterations;
        if (next == l0) {
            res.converged = true;
            break;
        }
        l0 = next;
    }
    l0 = std::min<int>(l0, static_cast<int>(m) - 1);
    if (l0 == 0) res.converged = true;

    std::vector<EffectEstimate> filled(effects.begin(), effects.end());
    for (int r = 0; r < l0; ++r) {
        EffectEstimate mirror = effects[by_value[static_cast<std::size_t>(r)]];
        mirror.value = 2.0 * center - mirror.value;
        res.imputed_effects.push_back(mirror);
        filled.push_back(mirror);
    }
    res.l0_final = l0;
    res.pooled = dl_random_effects(filled);
    res.pooled.method = Method::trim_fill;
    res.pooled.diagnostics["l0"] = l0;
    res.pooled.diagnostics["iterations"] = res.iterations;
    res.pooled.diagnostics["center"] = center;
    if (!res.converged) res.pooled.flags.emplace_back("no-convergence");
    return res;
}

}  // namespace metabias
