#include "mfexp/context.hpp"

#include <boost/math/distributions/beta.hpp>
#include <cmath>

#include "mfexp/errors.hpp"

namespace mfexp {

ContextModel::ContextModel(Distribution dist, DemandSampler sampler)
    : dist_(dist), sampler_(sampler) {
    if (const auto* beta = std::get_if<BetaContext>(&dist_)) {
        if (!(beta->a > 0.0) || !(beta->b > 0.0)) {
            throw DomainError("BetaContext: shape parameters must be > 0");
        }
    } else if (!(std::get<PointContext>(dist_).d > 0.0)) {
        throw DomainError("PointContext: scaled demand must be > 0");
    }
}

double ContextModel::mean() const {
    if (const auto* beta = std::get_if<BetaContext>(&dist_)) return beta->a / (beta->a + beta->b);
    return std::get<PointContext>(dist_).d;
}

double ContextModel::quantile(double prob) const {
    if (const auto* beta = std::get_if<BetaContext>(&dist_)) {
        return boost::math::quantile(boost::math::beta_distribution<double>(beta->a, beta->b), prob);
    }
    return std::get<PointContext>(dist_).d;
}

QuadratureRule ContextModel::expectation_rule(int nodes) const {
    QuadratureRule out;
    if (const auto* point = std::get_if<PointContext>(&dist_)) {
        out.nodes = {point->d};
        out.weights = {1.0};
        return out;
    }
    const auto& beta = std::get<BetaContext>(dist_);
    const boost::math::beta_distribution<double> dist(beta.a, beta.b);
    const QuadratureRule gl = gauss_legendre(nodes, 0.0, 1.0);
    double total = 0.0;
    for (std::size_t i = 0; i < gl.size(); ++i) {
        const double w = gl.weights[i] * boost::math::pdf(dist, gl.nodes[i]);
        if (w < 1e-14) continue;
        out.nodes.push_back(gl.nodes[i]);
        out.weights.push_back(w);
        total += w;
    }
    for (double& w : out.weights) w /= total;
    return out;
}

double ContextModel::sample_scaled_demand(std::mt19937_64& rng) const {
    if (const auto* beta = std::get_if<BetaContext>(&dist_)) {
        std::gamma_distribution<double> ga(beta->a, 1.0);
        std::gamma_distribution<double> gb(beta->b, 1.0);
        const double x = ga(rng);
        const double y = gb(rng);
        return x / (x + y);
    }
    return std::get<PointContext>(dist_).d;
}

std::int64_t ContextModel::sample_demand(std::int64_t n, double d, std::mt19937_64& rng) const {
    const double mean_demand = static_cast<double>(n) * d;
    if (sampler_ == DemandSampler::Deterministic) return std::llround(mean_demand);
    std::poisson_distribution<std::int64_t> pois(mean_demand);
    return pois(rng);
}

}  // namespace mfexp
