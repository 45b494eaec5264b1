#include "mfexp/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mfexp {

QuadratureRule gauss_legendre(int order, double lo, double hi) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    const double mid = 0.5 * (hi + lo);
    const double half = 0.5 * (hi - lo);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int j = 1; j <= order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = order * (z * p0 - p1) / (z * z - 1.0);
            const double step = p0 / dp;
            z -= step;
            if (std::abs(step) < 1e-15) break;
        }
        // recompute derivative at the converged root
        double p0 = 1.0;
        double p1 = 0.0;
        for (int j = 1; j <= order; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = order * (z * p0 - p1) / (z * z - 1.0);
        const double w = 2.0 / ((1.0 - z * z) * dp * dp);
        const auto lo_idx = static_cast<std::size_t>(i);
        const auto hi_idx = static_cast<std::size_t>(order - 1 - i);
        rule.nodes[lo_idx] = mid - half * z;
        rule.nodes[hi_idx] = mid + half * z;
        rule.weights[lo_idx] = half * w;
        rule.weights[hi_idx] = half * w;
    }
    return rule;
}

QuadratureRule composite_gauss_legendre(int panels, int order, double lo, double hi) {
    if (panels < 1) throw std::invalid_argument("composite_gauss_legendre: panels must be >= 1");
    QuadratureRule out;
    const double width = (hi - lo) / panels;
    for (int k = 0; k < panels; ++k) {
        const double a = lo + k * width;
        const QuadratureRule panel = gauss_legendre(order, a, a + width);
        out.nodes.insert(out.nodes.end(), panel.nodes.begin(), panel.nodes.end());
        out.weights.insert(out.weights.end(), panel.weights.begin(), panel.weights.end());
    }
    return out;
}

const QuadratureRule& logistic_density_rule() {
    static const QuadratureRule rule = [] {
        QuadratureRule r = composite_gauss_legendre(40, 8, -40.0, 40.0);
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double e = std::exp(-std::abs(r.nodes[i]));
            r.weights[i] *= e / ((1.0 + e) * (1.0 + e));
        }
        return r;
    }();
    return rule;
}

}  // namespace mfexp
