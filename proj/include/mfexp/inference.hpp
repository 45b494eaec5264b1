#pragma once

#include <string>

#include "mfexp/market_config.hpp"
#include "mfexp/simulator.hpp"

namespace mfexp {

/// Gradient estimate from one day of locally randomised payments. Fields other
/// than `valid` / `reason` are meaningful only when `valid` is true.
struct GradientEstimate {
    double DeltaHat = 0.0;    // marginal response (activation per currency unit)
    double UpsilonHat = 0.0;  // equilibrium supply gradient
    double GammaHat = 0.0;    // platform utility gradient
    double Dbar = 0.0;
    double Zbar = 0.0;
    bool valid = false;
    std::string reason;
};

/// Regression slope of Z on the perturbation signs, rescaled by 1 / zeta.
/// Throws DegenerateDesign when all signs agree and DomainError when zeta = 0.
double estimate_marginal_response(const DayOutcome& outcome);

/// Utility gradient for the identity earning function, with the mean-field
/// interference correction evaluated at the plug-in ratio Dbar / Zbar.
GradientEstimate estimate_utility_gradient(const DayOutcome& outcome, double p,
                                           const MarketConfig& model);

/// Surge-aware estimate: the correction uses the earning-function partials and
/// the utility derivative includes the settlement multiplier s and s'.
GradientEstimate estimate_utility_gradient_surge(const DayOutcome& outcome, double p,
                                                 const MarketConfig& model);

/// Chooses the estimator matching model.earning (identity, risk or surge).
GradientEstimate estimate_gradient(const DayOutcome& outcome, double p, const MarketConfig& model);

}  // namespace mfexp
