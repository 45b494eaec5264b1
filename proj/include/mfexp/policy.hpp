#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mfexp/equilibrium.hpp"
#include "mfexp/market_config.hpp"
#include "mfexp/smoothing.hpp"

namespace mfexp {

/// Weighted online mirror descent with quadratic regulariser: after period t
///   p_{t+1} = clip_I((sum_s s p_s + eta sum_s s Gamma_s) / sum_s s).
/// With I unbounded this is p_{t+1} = p_t + 2 eta Gamma_t / (t + 1).
struct OptimizerState {
    int t = 0;  // periods completed
    double eta = 20.0;
    PaymentInterval interval;
    double sumSP = 0.0;  // sum_s s p_s
    double sumS = 0.0;   // sum_s s = t (t + 1) / 2
    double theta = 0.0;  // sum_s s Gamma_s over valid estimates
    double pCurrent = 30.0;
    double pBarNumerator = 0.0;  // sum_s s p_s over played payments
    std::vector<double> trajectory;  // p_1, ..., p_t

    static OptimizerState start(double p1, double eta, PaymentInterval interval);
};

/// Records p_t = state.pCurrent as played and moves to p_{t+1}. An empty
/// gradient freezes the payment while the accumulators still advance.
OptimizerState mirror_descent_step(OptimizerState state, std::optional<double> gamma_hat);

/// p-bar_T = 2 / (T (T + 1)) sum_t t p_t; requires at least one completed period.
double averaged_payment(const OptimizerState& state);

/// Explore-then-commit baseline: fitted payment-to-utility curve and the
/// payment deployed after exploration.
struct GlobalPolicy {
    int exploreT = 0;
    double lo = 10.0;
    double hi = 30.0;
    std::vector<double> explore_payments;
    std::vector<double> explore_utilities;
    std::shared_ptr<const Smoother> smoother;
    double pHat = 0.0;
    std::string warning;  // set when the spline fit failed and the kernel was used
};

inline constexpr int kMinExplorePoints = 10;
inline constexpr int kExploitGridSize = 1000;

/// Fits the smoother to (payment, utility) pairs and picks the maximiser on a
/// 1000-point grid over [lo, hi]. Throws DomainError with < 10 points.
GlobalPolicy fit_global_policy(std::vector<double> payments, std::vector<double> utilities,
                               double lo = 10.0, double hi = 30.0);

struct OracleResult {
    double pStar = 0.0;
    double uStar = 0.0;
    bool diagnostic_passed = false;
    std::string method;   // "golden-section" or "grid+golden"
    std::string warning;
    ConcavityReport diagnostic;
};

inline constexpr int kOracleContextNodes = 256;
inline constexpr double kOracleTolerance = 1e-6;

/// Maximises the context-averaged mean-field utility on a bounded interval.
OracleResult oracle_optimal_payment(const MarketConfig& model, const PaymentInterval& interval,
                                    int diagnostic_grid = 41);

/// Golden-section maximisation of a unimodal function on [lo, hi].
template <class F>
double golden_section_argmax(F&& f, double lo, double hi, double tol) {
    const double inv_phi = 0.6180339887498949;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace mfexp
