#include "mfexp/inference.hpp"

#include <cmath>

#include "mfexp/errors.hpp"

namespace mfexp {

double estimate_marginal_response(const DayOutcome& outcome) {
    if (!(outcome.zeta > 0.0)) throw DomainError("marginal response needs zeta > 0");
    const std::size_t n = outcome.epsilon.size();
    if (n == 0 || outcome.Z.size() != n) throw DomainError("marginal response: empty or ragged outcome");

    double eps_sum = 0.0;
    double z_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        eps_sum += outcome.epsilon[i];
        z_sum += outcome.Z[i];
    }
    const double eps_bar = eps_sum / static_cast<double>(n);
    const double z_bar = z_sum / static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double de = outcome.epsilon[i] - eps_bar;
        sxy += (outcome.Z[i] - z_bar) * de;
        sxx += de * de;
    }
    if (!(sxx > 0.0)) throw DegenerateDesign("marginal response: all perturbation signs are equal");
    return sxy / sxx / outcome.zeta;
}

namespace {

GradientEstimate invalid(std::string why) {
    GradientEstimate g;
    g.valid = false;
    g.reason = std::move(why);
    return g;
}

// Shared plug-in construction. With s == 1 and the identity earning function
// this is exactly the Theorem-1 estimator; other earning functions only change
// the payment-equivalent of the rate partial and the settlement multiplier.
GradientEstimate plug_in_gradient(const DayOutcome& outcome, double p, const MarketConfig& model) {
    if (outcome.empty_supply || outcome.T == 0) return invalid("empty supply");
    if (!(outcome.Dbar > 0.0)) return invalid("no demand");
    double delta = 0.0;
    try {
        delta = estimate_marginal_response(outcome);
    } catch (const DegenerateDesign& e) {
        return invalid(e.what());
    }

    const auto& alloc = model.allocation;
    const auto& earn = model.earning;
    const double Dbar = outcome.Dbar;
    const double Zbar = outcome.Zbar;
    const double x = Dbar / Zbar;
    const double w = alloc.omega(x);
    const double wp = alloc.omega_prime(x);
    if (!(w > 0.0) || !(w < alloc.saturation())) return invalid("allocation rate at boundary");

    double effective_payment = p;
    if (earn.variant() != EarningFunction::Variant::Identity) {
        EarningPartials grad;
        try {
            grad = earn.partials_at_ratio(p, x, alloc);
        } catch (const DomainError& e) {
            return invalid(e.what());
        }
        if (!(grad.d_payment > 0.0)) return invalid("earning insensitive to payment");
        effective_payment = w * grad.d_rate / grad.d_payment;
    }
    const double s = earn.settlement_multiplier(x, alloc);
    const double sp = earn.settlement_multiplier_prime(x, alloc);
    const double r = model.revenue.r(x, alloc);
    const double rp = model.revenue.r_prime(x, alloc);

    GradientEstimate g;
    g.Dbar = Dbar;
    g.Zbar = Zbar;
    g.DeltaHat = delta;
    g.UpsilonHat = delta / (1.0 + effective_payment * Dbar * delta * wp / (Zbar * Zbar * w));
    g.GammaHat = g.UpsilonHat * (r - p * s * w - (rp - p * sp * w - p * s * wp) * x) - s * w * Zbar;
    g.valid = std::isfinite(g.DeltaHat) && std::isfinite(g.UpsilonHat) && std::isfinite(g.GammaHat);
    if (!g.valid) g.reason = "non-finite estimate";
    return g;
}

}  // namespace

GradientEstimate estimate_utility_gradient(const DayOutcome& outcome, double p,
                                           const MarketConfig& model) {
    if (model.earning.variant() != EarningFunction::Variant::Identity) {
        throw DomainError("estimate_utility_gradient: identity earning function required");
    }
    return plug_in_gradient(outcome, p, model);
}

GradientEstimate estimate_utility_gradient_surge(const DayOutcome& outcome, double p,
                                                 const MarketConfig& model) {
    if (model.earning.variant() != EarningFunction::Variant::Surge) {
        throw DomainError("estimate_utility_gradient_surge: surge earning function required");
    }
    return plug_in_gradient(outcome, p, model);
}

GradientEstimate estimate_gradient(const DayOutcome& outcome, double p, const MarketConfig& model) {
    return plug_in_gradient(outcome, p, model);
}

}  // namespace mfexp
