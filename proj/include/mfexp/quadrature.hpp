#pragma once

#include <cstddef>
#include <vector>

namespace mfexp {

/// Nodes and weights of a fixed quadrature rule: sum_i weight[i] * g(node[i]).
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const { return nodes.size(); }

    template <class F>
    double integrate(F&& g) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g(nodes[i]);
        return acc;
    }
};

/// Gauss-Legendre rule with `order` nodes on [lo, hi] (Newton iteration on P_n).
QuadratureRule gauss_legendre(int order, double lo, double hi);

/// `panels` equal-width Gauss-Legendre panels of `order` nodes each on [lo, hi].
QuadratureRule composite_gauss_legendre(int panels, int order, double lo, double hi);

/// Rule for E[g(Y)] with Y standard logistic: composite Gauss-Legendre on
/// [-40, 40] with weights multiplied by the logistic density. Truncated mass is
/// below 1e-17. This is the workhorse for expectations over the outside option.
const QuadratureRule& logistic_density_rule();

}  // namespace mfexp
