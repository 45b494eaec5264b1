#include "mfexp/market_model.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "mfexp/errors.hpp"
#include "mfexp/quadrature.hpp"

namespace mfexp {

namespace {

void require_ratio(double x, const char* what) {
    if (!(x >= 0.0)) throw DomainError(std::string(what) + ": ratio must be >= 0");
}

// Geometric sums of y in [0, 1]:
//   full    = sum_{k=0}^{L-1} y^k
//   partial = sum_{k=0}^{L-2} y^k
//   slope   = sum_{j=1}^{L-1} j y^{L-1-j}
struct GeometricSums {
    double full = 0.0;
    double partial = 0.0;
    double slope = 0.0;
};

GeometricSums geometric_sums(double y, int L) {
    GeometricSums s;
    double pw = 1.0;
    for (int k = 0; k < L; ++k) {
        s.full += pw;
        if (k < L - 1) s.partial += pw;
        // coefficient of y^k in `slope` is (L-1-k)
        s.slope += (L - 1 - k) * pw;
        pw *= y;
    }
    return s;
}

}  // namespace

AllocationCurve::AllocationCurve(int capacity) : capacity_(capacity) {
    if (capacity < 2) throw DomainError("AllocationCurve: capacity L must be >= 2");
}

// The closed form is evaluated through its geometric-sum factorisation
// (x - x^L)/(1 - x^L) = sum_{j=1}^{L-1} x^j / sum_{j=0}^{L-1} x^j, and through the
// reflected sums in y = 1/x above 1. Near x = 1 a Taylor series is used.
double AllocationCurve::omega(double x) const {
    require_ratio(x, "omega");
    const int L = capacity_;
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return saturation();
    const double h = x - 1.0;
    if (std::abs(h) < kSeriesHalfWidth) {
        const double c0 = (L - 1.0) / L;
        const double c1 = (L - 1.0) / (2.0 * L);
        const double c2 = -(L - 1.0) * (L + 1.0) / (6.0 * L);
        const double c3 = (L - 1.0) * (L + 1.0) / (4.0 * L);
        return c0 + h * (c1 + h * (c2 / 2.0 + h * c3 / 6.0));
    }
    if (x < 1.0) {
        const GeometricSums s = geometric_sums(x, L);
        return x * s.partial / s.full;
    }
    const GeometricSums s = geometric_sums(1.0 / x, L);
    return s.partial / s.full;
}

double AllocationCurve::omega_prime(double x) const {
    require_ratio(x, "omega_prime");
    const int L = capacity_;
    if (std::isinf(x)) return 0.0;
    const double h = x - 1.0;
    if (std::abs(h) < kSeriesHalfWidth) {
        const double c1 = (L - 1.0) / (2.0 * L);
        const double c2 = -(L - 1.0) * (L + 1.0) / (6.0 * L);
        const double c3 = (L - 1.0) * (L + 1.0) / (4.0 * L);
        return c1 + h * (c2 + h * c3 / 2.0);
    }
    // omega = 1 - 1/D with D(x) = sum_{j<L} x^j, so omega' = D'(x) / D(x)^2.
    if (x < 1.0) {
        double d = 0.0;
        double dprime = 0.0;
        double pw = 1.0;
        for (int j = 0; j < L; ++j) {
            d += pw;
            if (j + 1 < L) dprime += (j + 1) * pw;
            pw *= x;
        }
        return dprime / (d * d);
    }
    const double y = 1.0 / x;
    const GeometricSums s = geometric_sums(y, L);
    // D(x) = x^{L-1} full(y), D'(x) = x^{L-2} slope(y)  =>  omega' = y^L slope / full^2
    return std::pow(y, L) * s.slope / (s.full * s.full);
}

double AllocationCurve::omega_inverse(double q) const {
    if (!(q > 0.0) || !(q < saturation())) {
        throw DomainError("omega_inverse: allocation rate must lie in (0, saturation)");
    }
    double lo = 0.0;
    double hi = 1.0;
    while (omega(hi) < q) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw NumericalError("omega_inverse: failed to bracket");
    }
    double mid = 0.5 * (lo + hi);
    for (int iter = 0; iter < 2000; ++iter) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket exhausted in floating point
        const double val = omega(mid);
        if (val < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15 * std::max(1.0, mid)) break;
    }
    return mid;
}

double AllocationCurve::prelimit(double demand, double supply) const {
    if (!(demand >= 0.0) || !(supply >= 0.0)) {
        throw DomainError("prelimit allocation: demand and supply must be >= 0");
    }
    if (supply == 0.0) return saturation();
    return omega(demand / supply);
}

double LogNormalOutsideOption::cdf(double b) const {
    if (b <= 0.0) return 0.0;
    const double z = std::log(b / median) / sigma;
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double LogNormalOutsideOption::pdf(double b) const {
    if (b <= 0.0) return 0.0;
    const double z = std::log(b / median) / sigma;
    return std::exp(-0.5 * z * z) / (b * sigma * std::sqrt(2.0 * std::numbers::pi));
}

double LogNormalOutsideOption::pdf_prime(double b) const {
    if (b <= 0.0) return 0.0;
    const double z = std::log(b / median) / sigma;
    return -pdf(b) * (1.0 + z / sigma) / b;
}

ChoiceFamily::ChoiceFamily(double alpha, LogNormalOutsideOption outside)
    : alpha_(alpha), outside_(outside) {
    if (!(alpha > 0.0)) throw DomainError("ChoiceFamily: alpha must be > 0");
    if (!(outside.median > 0.0) || !(outside.sigma > 0.0)) {
        throw DomainError("ChoiceFamily: outside option needs median > 0 and sigma > 0");
    }
}

double ChoiceFamily::prob(double b, double x) const {
    const double z = alpha_ * (x - b);
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double ChoiceFamily::prob_prime(double b, double x) const {
    const double e = std::exp(-std::abs(alpha_ * (x - b)));
    return alpha_ * e / ((1.0 + e) * (1.0 + e));
}

// E_B[sigma(alpha (x - B))] = integral F_B(x + y / alpha) sigma'(y) dy after
// integrating by parts in b and substituting y = alpha (b - x).
double ChoiceFamily::mean_prob(double x) const {
    const QuadratureRule& rule = logistic_density_rule();
    return rule.integrate([&](double y) { return outside_.cdf(x + y / alpha_); });
}

double ChoiceFamily::mean_prob_prime(double x) const {
    const QuadratureRule& rule = logistic_density_rule();
    return rule.integrate([&](double y) { return outside_.pdf(x + y / alpha_); });
}

double ChoiceFamily::mean_prob_second(double x) const {
    const QuadratureRule& rule = logistic_density_rule();
    return rule.integrate([&](double y) { return outside_.pdf_prime(x + y / alpha_); });
}

double RiskBeta::value(double p) const {
    switch (kind) {
        case Kind::Linear: return p;
        case Kind::Sqrt: return std::sqrt(scale * std::max(p, 0.0));
        case Kind::Log: return scale * std::log1p(p / scale);
    }
    return p;
}

double RiskBeta::derivative(double p) const {
    switch (kind) {
        case Kind::Linear: return 1.0;
        case Kind::Sqrt: return 0.5 * std::sqrt(scale / p);
        case Kind::Log: return 1.0 / (1.0 + p / scale);
    }
    return 1.0;
}

std::string RiskBeta::name() const {
    switch (kind) {
        case Kind::Linear: return "linear";
        case Kind::Sqrt: return "sqrt";
        case Kind::Log: return "log";
    }
    return "linear";
}

RiskBeta RiskBeta::from_name(const std::string& name) {
    if (name == "linear") return {Kind::Linear};
    if (name == "sqrt") return {Kind::Sqrt};
    if (name == "log") return {Kind::Log};
    throw DomainError("unknown risk beta '" + name + "' (expected linear, sqrt or log)");
}

// For x <= 1 the default multiplier is evaluated as s(x) = 1 + x^{L-1} / P(x) with
// P(x) = sum_{k=0}^{L-2} x^k, which is x / omega(x) without the 0/0 at x = 0.
double SurgeMultiplier::value(double x, const AllocationCurve& alloc) const {
    switch (kind) {
        case Kind::Unit: return 1.0;
        case Kind::Custom: return custom_value(x);
        case Kind::Ratio: {
            if (x > 1.0) return x / alloc.omega(x);
            const int L = alloc.capacity();
            double poly = 0.0;
            double pw = 1.0;
            for (int k = 0; k <= L - 2; ++k) {
                poly += pw;
                pw *= x;
            }
            return 1.0 + pw / poly;  // pw == x^{L-1}
        }
    }
    return 1.0;
}

double SurgeMultiplier::derivative(double x, const AllocationCurve& alloc) const {
    switch (kind) {
        case Kind::Unit: return 0.0;
        case Kind::Custom: return custom_derivative ? custom_derivative(x) : 0.0;
        case Kind::Ratio: {
            if (x > 1.0) {
                const double w = alloc.omega(x);
                return (w - x * alloc.omega_prime(x)) / (w * w);
            }
            const int L = alloc.capacity();
            double poly = 0.0;
            double dpoly = 0.0;
            double pw = 1.0;
            for (int k = 0; k <= L - 2; ++k) {
                poly += pw;
                if (k + 1 <= L - 2) dpoly += (k + 1) * pw;
                pw *= x;
            }
            // pw == x^{L-1}
            const double lead = (L == 2) ? 1.0 : (L - 1.0) * std::pow(x, L - 2);
            return (lead * poly - pw * dpoly) / (poly * poly);
        }
    }
    return 0.0;
}

std::string SurgeMultiplier::name() const {
    switch (kind) {
        case Kind::Ratio: return "ratio";
        case Kind::Unit: return "unit";
        case Kind::Custom: return "custom";
    }
    return "ratio";
}

SurgeMultiplier SurgeMultiplier::from_name(const std::string& name) {
    if (name == "ratio") return {Kind::Ratio, {}, {}};
    if (name == "unit") return {Kind::Unit, {}, {}};
    throw DomainError("unknown surge multiplier '" + name + "' (expected ratio or unit)");
}

EarningFunction EarningFunction::identity() { return {}; }

EarningFunction EarningFunction::risk(RiskBeta beta) {
    EarningFunction e;
    e.variant_ = Variant::Risk;
    e.beta_ = beta;
    return e;
}

EarningFunction EarningFunction::surge(SurgeMultiplier s) {
    EarningFunction e;
    e.variant_ = Variant::Surge;
    e.surge_ = std::move(s);
    return e;
}

double EarningFunction::earning(double p, double q, const AllocationCurve& alloc) const {
    switch (variant_) {
        case Variant::Identity: return p * q;
        case Variant::Risk: return beta_.value(p) * q;
        case Variant::Surge: return p * q * surge_.value(alloc.omega_inverse(q), alloc);
    }
    return p * q;
}

EarningPartials EarningFunction::partials(double p, double q, const AllocationCurve& alloc) const {
    switch (variant_) {
        case Variant::Identity: return {q, p};
        case Variant::Risk: return {beta_.derivative(p) * q, beta_.value(p)};
        case Variant::Surge: {
            const double x = alloc.omega_inverse(q);
            const double s = surge_.value(x, alloc);
            const double ds = surge_.derivative(x, alloc);
            return {q * s, p * (s + q * ds / alloc.omega_prime(x))};
        }
    }
    return {q, p};
}

double EarningFunction::earning_at_ratio(double p, double x, const AllocationCurve& alloc) const {
    const double q = alloc.omega(x);
    switch (variant_) {
        case Variant::Identity: return p * q;
        case Variant::Risk: return beta_.value(p) * q;
        case Variant::Surge: return p * q * surge_.value(x, alloc);
    }
    return p * q;
}

EarningPartials EarningFunction::partials_at_ratio(double p, double x,
                                                   const AllocationCurve& alloc) const {
    const double q = alloc.omega(x);
    switch (variant_) {
        case Variant::Identity: return {q, p};
        case Variant::Risk: return {beta_.derivative(p) * q, beta_.value(p)};
        case Variant::Surge: {
            const double s = surge_.value(x, alloc);
            const double ds = surge_.derivative(x, alloc);
            const double wp = alloc.omega_prime(x);
            if (!(wp > 0.0)) throw DomainError("surge partials: allocation rate at saturation");
            return {q * s, p * (s + q * ds / wp)};
        }
    }
    return {q, p};
}

double EarningFunction::settlement_multiplier(double x, const AllocationCurve& alloc) const {
    return variant_ == Variant::Surge ? surge_.value(x, alloc) : 1.0;
}

double EarningFunction::settlement_multiplier_prime(double x, const AllocationCurve& alloc) const {
    return variant_ == Variant::Surge ? surge_.derivative(x, alloc) : 0.0;
}

std::string EarningFunction::name() const {
    switch (variant_) {
        case Variant::Identity: return "identity";
        case Variant::Risk: return "risk";
        case Variant::Surge: return "surge";
    }
    return "identity";
}

double RevenueCurve::prelimit(double demand, double supply, const AllocationCurve& alloc) const {
    if (supply <= 0.0) return 0.0;
    return r(demand / supply, alloc) * supply;
}

}  // namespace mfexp
