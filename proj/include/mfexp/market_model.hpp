#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>

namespace mfexp {

/// Regular allocation function of parallel finite-capacity M/M/1 queues,
///   omega(x) = (x - x^L) / (1 - x^L),  omega(1) = 1 - 1/L,
/// where x is the demand-to-active-supply ratio and L the capacity parameter.
/// Concave, non-decreasing, omega(0) = 0, saturates at 1.
class AllocationCurve {
public:
    /// Half-width of the series branch around the removable singularity x = 1.
    static constexpr double kSeriesHalfWidth = 1e-6;

    explicit AllocationCurve(int capacity = 8);

    int capacity() const { return capacity_; }
    double saturation() const { return 1.0; }

    double omega(double x) const;
    double omega_prime(double x) const;
    /// Solves omega(x) = q by bisection; q must lie in (0, saturation).
    double omega_inverse(double q) const;

    /// Pre-limit allocation Omega(d, t) = omega(d / t); Omega(d, 0) = saturation.
    double prelimit(double demand, double supply) const;

    bool operator==(const AllocationCurve&) const = default;

private:
    int capacity_;
};

/// Log-normal private feature: log(B / median) ~ N(0, sigma^2).
struct LogNormalOutsideOption {
    double median = 20.0;
    double sigma = 1.0;

    double cdf(double b) const;
    double pdf(double b) const;
    double pdf_prime(double b) const;

    template <class Rng>
    double sample(Rng& rng) const {
        std::normal_distribution<double> g(0.0, 1.0);
        return median * std::exp(sigma * g(rng));
    }

    bool operator==(const LogNormalOutsideOption&) const = default;
};

/// Logistic supplier choice f_b(x) = 1 / (1 + exp(-alpha (x - b))) with
/// log-normal break-even threshold b.
class ChoiceFamily {
public:
    ChoiceFamily() = default;
    ChoiceFamily(double alpha, LogNormalOutsideOption outside);

    double alpha() const { return alpha_; }
    const LogNormalOutsideOption& outside_option() const { return outside_; }

    double prob(double b, double x) const;
    double prob_prime(double b, double x) const;

    // Expectations over the outside option, on a fixed rule so that each is
    // the exact derivative of the previous one.
    double mean_prob(double x) const;
    double mean_prob_prime(double x) const;
    double mean_prob_second(double x) const;

    bool operator==(const ChoiceFamily&) const = default;

private:
    double alpha_ = 1.0;
    LogNormalOutsideOption outside_{};
};

/// Concave utility of revenue for risk-averse suppliers, beta(0) = 0.
struct RiskBeta {
    enum class Kind { Linear, Sqrt, Log };
    Kind kind = Kind::Linear;
    double scale = 20.0;  // reference payment; sqrt and log variants match p near it

    double value(double p) const;
    double derivative(double p) const;
    std::string name() const;
    static RiskBeta from_name(const std::string& name);

    bool operator==(const RiskBeta&) const = default;
};

/// Committed surge multiplier s(x) applied to payments as a function of the
/// realized demand/supply ratio.
struct SurgeMultiplier {
    enum class Kind { Ratio, Unit, Custom };
    Kind kind = Kind::Ratio;
    std::function<double(double)> custom_value;
    std::function<double(double)> custom_derivative;

    double value(double x, const AllocationCurve& alloc) const;
    double derivative(double x, const AllocationCurve& alloc) const;
    std::string name() const;
    static SurgeMultiplier from_name(const std::string& name);
};

struct EarningPartials {
    double d_payment = 0.0;  // d theta / d p
    double d_rate = 0.0;     // d theta / d q
};

/// Generalized earning function theta(p, q): identity p q, risk beta(p) q, or
/// surge p q s(omega^{-1}(q)).
class EarningFunction {
public:
    enum class Variant { Identity, Risk, Surge };

    EarningFunction() = default;
    static EarningFunction identity();
    static EarningFunction risk(RiskBeta beta);
    static EarningFunction surge(SurgeMultiplier s = {});

    Variant variant() const { return variant_; }
    const RiskBeta& beta() const { return beta_; }
    const SurgeMultiplier& surge_multiplier() const { return surge_; }

    double earning(double p, double q, const AllocationCurve& alloc) const;
    EarningPartials partials(double p, double q, const AllocationCurve& alloc) const;

    // Same quantities parametrised by the ratio x with q = omega(x). Avoids the
    // inverse in the surge variant and is what the equilibrium solver uses.
    double earning_at_ratio(double p, double x, const AllocationCurve& alloc) const;
    EarningPartials partials_at_ratio(double p, double x, const AllocationCurve& alloc) const;

    /// Per-unit payment multiplier at settlement: s(x) for surge, else 1.
    double settlement_multiplier(double x, const AllocationCurve& alloc) const;
    double settlement_multiplier_prime(double x, const AllocationCurve& alloc) const;

    std::string name() const;

private:
    Variant variant_ = Variant::Identity;
    RiskBeta beta_{};
    SurgeMultiplier surge_{};
};

/// Linear platform revenue r(x) = gamma omega(x); R(d, t) = r(d / t) t.
struct RevenueCurve {
    double gamma = 100.0;

    double r(double x, const AllocationCurve& alloc) const { return gamma * alloc.omega(x); }
    double r_prime(double x, const AllocationCurve& alloc) const {
        return gamma * alloc.omega_prime(x);
    }
    double prelimit(double demand, double supply, const AllocationCurve& alloc) const;

    bool operator==(const RevenueCurve&) const = default;
};

}  // namespace mfexp
