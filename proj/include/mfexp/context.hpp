#pragma once

#include <cstdint>
#include <random>
#include <variant>

#include "mfexp/quadrature.hpp"

namespace mfexp {

/// Scaled mean demand d_a ~ Beta(a, b).
struct BetaContext {
    double a = 15.0;
    double b = 35.0;
    bool operator==(const BetaContext&) const = default;
};

/// Degenerate context: the same scaled mean demand every day.
struct PointContext {
    double d = 0.4;
    bool operator==(const PointContext&) const = default;
};

enum class DemandSampler { Poisson, Deterministic };

/// Daily context and demand model: draws d = E[D/n | A], then integer demand D
/// with E[D / n | d] = d.
class ContextModel {
public:
    using Distribution = std::variant<BetaContext, PointContext>;

    ContextModel() = default;
    ContextModel(Distribution dist, DemandSampler sampler);

    const Distribution& distribution() const { return dist_; }
    DemandSampler sampler() const { return sampler_; }
    bool is_point_mass() const { return std::holds_alternative<PointContext>(dist_); }

    double mean() const;
    double quantile(double prob) const;

    /// Quadrature for E[g(d)]: Gauss-Legendre on [0, 1] against the Beta
    /// density with `nodes` points, dropping nodes of negligible weight; a single
    /// node for a point mass. Weights sum to 1.
    QuadratureRule expectation_rule(int nodes = 256) const;

    double sample_scaled_demand(std::mt19937_64& rng) const;
    std::int64_t sample_demand(std::int64_t n, double d, std::mt19937_64& rng) const;

    bool operator==(const ContextModel&) const = default;

private:
    Distribution dist_ = BetaContext{};
    DemandSampler sampler_ = DemandSampler::Poisson;
};

}  // namespace mfexp
