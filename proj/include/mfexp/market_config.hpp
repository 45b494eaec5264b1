#pragma once

#include <cstdint>
#include <limits>

#include "mfexp/context.hpp"
#include "mfexp/market_model.hpp"

namespace mfexp {

/// Payment bounds I = [lo, hi]; infinite ends mean unbounded.
struct PaymentInterval {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    static PaymentInterval unbounded() { return {}; }
    bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
    bool contains(double p) const { return p >= lo && p <= hi; }
    double clamp(double p) const { return p < lo ? lo : (p > hi ? hi : p); }
    bool operator==(const PaymentInterval&) const = default;
};

struct ZetaSchedule {
    enum class Kind { Fixed, PowerLaw };
    Kind kind = Kind::Fixed;
    double exponent = 0.25;  // zeta_n = zeta n^{-exponent}, 0 < exponent < 0.5
    bool operator==(const ZetaSchedule&) const = default;
};

/// Everything that defines one marketplace instance.
struct MarketConfig {
    std::int64_t n = 10000;
    AllocationCurve allocation{8};
    ChoiceFamily choice{1.0, LogNormalOutsideOption{20.0, 1.0}};
    EarningFunction earning = EarningFunction::identity();
    RevenueCurve revenue{100.0};
    ContextModel context{BetaContext{15.0, 35.0}, DemandSampler::Poisson};
    double zeta = 0.5;
    ZetaSchedule zeta_schedule{};
    PaymentInterval interval{5.0, 60.0};

    /// Perturbation magnitude actually deployed at market size n.
    double effective_zeta() const {
        if (zeta_schedule.kind == ZetaSchedule::Kind::PowerLaw) {
            return zeta * std::pow(static_cast<double>(n), -zeta_schedule.exponent);
        }
        return zeta;
    }

    /// Default marketplace: logistic choice with alpha = 1, log(B/20) ~ N(0,1),
    /// queue allocation with L = 8, gamma = 100, d ~ Beta(15, 35), zeta = 0.5.
    static MarketConfig defaults() { return {}; }

    /// Defaults with every day at the same scaled demand d.
    static MarketConfig at_fixed_demand(double d) {
        MarketConfig m;
        m.context = ContextModel{PointContext{d}, DemandSampler::Poisson};
        return m;
    }
};

}  // namespace mfexp
