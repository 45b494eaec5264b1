#include "mfexp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfexp/errors.hpp"

namespace mfexp {

OptimizerState OptimizerState::start(double p1, double eta, PaymentInterval interval) {
    if (!(eta > 0.0)) throw DomainError("optimizer: step size must be > 0");
    OptimizerState s;
    s.eta = eta;
    s.interval = interval;
    s.pCurrent = interval.clamp(p1);
    return s;
}

OptimizerState mirror_descent_step(OptimizerState state, std::optional<double> gamma_hat) {
    const int t = ++state.t;
    const double played = state.pCurrent;
    const double weight = static_cast<double>(t);
    state.trajectory.push_back(played);
    state.sumSP += weight * played;
    state.sumS += weight;
    state.pBarNumerator += weight * played;
    if (gamma_hat && std::isfinite(*gamma_hat)) {
        state.theta += weight * *gamma_hat;
        state.pCurrent = state.interval.clamp((state.sumSP + state.eta * state.theta) / state.sumS);
    }
    return state;
}

double averaged_payment(const OptimizerState& state) {
    if (state.t < 1) throw DomainError("averaged_payment: no completed periods");
    const double T = static_cast<double>(state.t);
    return 2.0 * state.pBarNumerator / (T * (T + 1.0));
}

GlobalPolicy fit_global_policy(std::vector<double> payments, std::vector<double> utilities,
                               double lo, double hi) {
    if (payments.size() != utilities.size()) throw DomainError("global policy: size mismatch");
    if (static_cast<int>(payments.size()) < kMinExplorePoints) {
        throw DomainError("global policy: need at least 10 exploration points");
    }
    if (!(lo < hi)) throw DomainError("global policy: empty price range");
    GlobalPolicy policy;
    policy.exploreT = static_cast<int>(payments.size());
    policy.lo = lo;
    policy.hi = hi;
    try {
        policy.smoother = std::make_shared<SmoothingSpline>(payments, utilities);
    } catch (const std::exception& e) {
        policy.warning = std::string("spline fit failed, using kernel regression: ") + e.what();
        policy.smoother = std::make_shared<KernelRegression>(payments, utilities, 2.0);
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kExploitGridSize; ++k) {
        const double p = lo + (hi - lo) * k / (kExploitGridSize - 1);
        const double v = (*policy.smoother)(p);
        if (v > best) {
            best = v;
            policy.pHat = p;
        }
    }
    if (!std::isfinite(best)) throw NumericalError("global policy: smoother produced no finite value");
    policy.explore_payments = std::move(payments);
    policy.explore_utilities = std::move(utilities);
    return policy;
}

OracleResult oracle_optimal_payment(const MarketConfig& model, const PaymentInterval& interval,
                                    int diagnostic_grid) {
    if (!interval.bounded()) throw DomainError("oracle: interval must be bounded");
    const QuadratureRule contexts = model.context.expectation_rule(kOracleContextNodes);
    auto u = [&](double p) { return population_utility(p, model, contexts); };

    OracleResult res;
    res.diagnostic = concavity_diagnostic(model, interval, diagnostic_grid);
    res.diagnostic_passed = res.diagnostic.passed;
    double lo = interval.lo;
    double hi = interval.hi;
    if (res.diagnostic_passed) {
        res.method = "golden-section";
    } else {
        res.method = "grid+golden";
        res.warning = "concavity diagnostic failed (" + res.diagnostic.message +
                      "); using grid search with local refinement";
        const auto& grid = res.diagnostic.grid;
        const auto& vals = res.diagnostic.utility;
        const auto best = static_cast<std::size_t>(
            std::max_element(vals.begin(), vals.end()) - vals.begin());
        lo = grid[best == 0 ? 0 : best - 1];
        hi = grid[std::min(best + 1, grid.size() - 1)];
    }
    res.pStar = golden_section_argmax(u, lo, hi, kOracleTolerance);
    res.uStar = u(res.pStar);
    return res;
}

}  // namespace mfexp
