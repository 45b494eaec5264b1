#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfexp/market_config.hpp"
#include "mfexp/quadrature.hpp"

namespace mfexp {

/// Root of the supplier-activation balance equation mu = psi(mu).
struct EquilibriumPoint {
    double mu = 0.0;        // active fraction
    double q = 0.0;         // per-supplier allocation rate at mu
    double residual = 0.0;  // |mu - psi(mu)|
    int iterations = 0;
    bool degenerate = false;  // psi(lower bound) <= lower bound: no interior root
};

/// Mean-field analytics at payment p and scaled demand d.
struct MeanFieldReport {
    double p = 0.0;
    double d = 0.0;
    double mu = 0.0;
    double q = 0.0;
    double u = 0.0;
    double Delta = 0.0;       // marginal response
    double muPrime = 0.0;     // equilibrium supply slope
    double uPrime = 0.0;      // utility slope
    double R = 0.0;           // interference factor minus one
    double sigmaDelta = 0.0;  // scaled marginal sensitivity
    double sigmaOmega = 0.0;  // scaled matching elasticity
};

inline constexpr double kMuLowerBound = 1e-9;

/// Mean-field balance map psi(mu) for zeta-perturbed payments around p.
double balance_map(double mu, double p, double zeta, double d, const MarketConfig& model);

/// Solves mu = psi(mu) by bisection on [kMuLowerBound, 1]. psi is
/// non-increasing in mu, so the root is unique.
EquilibriumPoint solve_mu(double p, double zeta, double d, const MarketConfig& model);

/// Bisection restricted to a caller-chosen bracket inside [kMuLowerBound, 1]
/// (falls back to the full bracket if the given one does not bracket the root).
EquilibriumPoint solve_mu_in(double p, double zeta, double d, const MarketConfig& model,
                             double lo, double hi);

/// Equilibrium under exact finite-n beliefs q_n(mu) = E[Omega(D, X)],
/// X ~ Binomial(n, mu), with total demand D fixed.
EquilibriumPoint solve_mu_finite_n(double p, double zeta, double demand, std::int64_t n,
                                   const MarketConfig& model);

MeanFieldReport mean_field_report(double p, double d, const MarketConfig& model);

/// Limiting utility u_d(p) (zeta = 0).
double mean_field_utility(double p, double d, const MarketConfig& model);

/// Limiting utility u_d(p, zeta) when payments are zeta-perturbed around p.
double perturbed_utility(double p, double zeta, double d, const MarketConfig& model);

/// Context-averaged utility sum_j w_j u_{d_j}(p, zeta).
double population_utility(double p, const MarketConfig& model, const QuadratureRule& contexts,
                          double zeta = 0.0);

inline constexpr std::int64_t kMaxExactFiniteN = 10000;

/// q_n(mu) = E[Omega(demand, X)], X ~ Binomial(n, mu), exact enumeration.
double finite_n_q(double mu, double demand, std::int64_t n, const MarketConfig& model);

/// d q_n / d mu through the exponential-family identity
/// d/dmu E[g(X)] = eta'(mu) Cov(g(X), X), eta'(mu) = 1 / (mu (1 - mu)).
double stein_dq(double mu, double demand, std::int64_t n, const MarketConfig& model);

/// `passed` reflects the measured curvature of the population utility; the
/// sufficient-condition premises are reported separately in `premises_hold`
/// because the default logistic/log-normal market violates them for small
/// earnings while u itself remains concave.
struct ConcavityReport {
    bool passed = false;
    bool premises_hold = false;
    bool utility_concave = false;     // all second differences of u on the grid < 0
    bool choice_concave = false;      // mean choice strictly concave on [x_lo, x_hi]
    bool choice_intercept = false;    // f(x_lo) - f'(x_lo) x_lo >= 0
    bool allocation_concave = false;  // omega'' < 0 on the induced ratio range
    bool below_revenue_rate = false;  // interval upper end < gamma
    double worst_second_difference = 0.0;
    double sigma = 0.0;           // strong-concavity modulus estimate (min -u'' over grid)
    double gradient_bound = 0.0;  // max |u'_d(p)| over grid and context range
    std::vector<double> grid;
    std::vector<double> utility;
    std::string message;
};

/// Second differences of the population utility on a uniform grid over [lo, hi],
/// plus per-context premise checks and the sigma / gradient-bound estimates.
ConcavityReport concavity_diagnostic(const MarketConfig& model, const PaymentInterval& interval,
                                     int grid_size);

}  // namespace mfexp
