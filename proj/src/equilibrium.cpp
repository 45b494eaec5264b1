#include "mfexp/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfexp/errors.hpp"

namespace mfexp {

namespace {

void require_payment(double p, double zeta) {
    if (!(zeta >= 0.0)) throw DomainError("perturbation zeta must be >= 0");
    if (!(p > zeta)) throw DomainError("payment must exceed the perturbation (p > zeta)");
}

// Mean activation given the anticipated ratio x = d / mu.
double activation_at_ratio(double x, double p, double zeta, const MarketConfig& model) {
    const auto& alloc = model.allocation;
    const auto& earn = model.earning;
    if (zeta == 0.0) return model.choice.mean_prob(earn.earning_at_ratio(p, x, alloc));
    return 0.5 * (model.choice.mean_prob(earn.earning_at_ratio(p + zeta, x, alloc)) +
                  model.choice.mean_prob(earn.earning_at_ratio(p - zeta, x, alloc)));
}

// Mean activation given an anticipated allocation rate q (finite-n beliefs).
double activation_at_rate(double q, double p, double zeta, const MarketConfig& model) {
    const auto& alloc = model.allocation;
    const auto& earn = model.earning;
    auto theta = [&](double pay) {
        if (earn.variant() == EarningFunction::Variant::Surge) {
            if (q >= alloc.saturation()) return std::numeric_limits<double>::max();
            if (q <= 0.0) return 0.0;
        }
        return earn.earning(pay, q, alloc);
    };
    if (zeta == 0.0) return model.choice.mean_prob(theta(p));
    return 0.5 * (model.choice.mean_prob(theta(p + zeta)) + model.choice.mean_prob(theta(p - zeta)));
}

// Bisection on g(mu) = mu - psi(mu), which is strictly increasing.
template <class Psi>
EquilibriumPoint bisect_balance(Psi&& psi, double lo, double hi) {
    EquilibriumPoint out;
    const double g_lo = lo - psi(lo);
    if (g_lo >= 0.0) {
        out.mu = lo;
        out.residual = std::abs(g_lo);
        out.degenerate = true;
        return out;
    }
    const double g_hi = hi - psi(hi);
    if (g_hi <= 0.0) {
        out.mu = hi;
        out.residual = std::abs(g_hi);
        return out;
    }
    double best_mu = lo;
    double best_g = std::abs(g_lo);
    int it = 0;
    for (; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double g = mid - psi(mid);
        if (std::abs(g) < best_g) {
            best_g = std::abs(g);
            best_mu = mid;
        }
        if (g == 0.0 || (hi - lo) < 1e-15) break;
        if (g < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    out.mu = best_mu;
    out.residual = best_g;
    out.iterations = it;
    return out;
}

}  // namespace

double balance_map(double mu, double p, double zeta, double d, const MarketConfig& model) {
    return activation_at_ratio(d / mu, p, zeta, model);
}

EquilibriumPoint solve_mu_in(double p, double zeta, double d, const MarketConfig& model,
                             double lo, double hi) {
    require_payment(p, zeta);
    if (!(d > 0.0)) throw DomainError("solve_mu: scaled demand must be > 0");
    lo = std::clamp(lo, kMuLowerBound, 1.0);
    hi = std::clamp(hi, kMuLowerBound, 1.0);
    auto psi = [&](double mu) { return activation_at_ratio(d / mu, p, zeta, model); };
    const bool brackets = lo < hi && (lo - psi(lo)) < 0.0 && (hi - psi(hi)) > 0.0;
    EquilibriumPoint out = brackets ? bisect_balance(psi, lo, hi)
                                    : bisect_balance(psi, kMuLowerBound, 1.0);
    out.q = model.allocation.omega(d / out.mu);
    return out;
}

EquilibriumPoint solve_mu(double p, double zeta, double d, const MarketConfig& model) {
    return solve_mu_in(p, zeta, d, model, kMuLowerBound, 1.0);
}

EquilibriumPoint solve_mu_finite_n(double p, double zeta, double demand, std::int64_t n,
                                   const MarketConfig& model) {
    require_payment(p, zeta);
    auto psi = [&](double mu) {
        return activation_at_rate(finite_n_q(mu, demand, n, model), p, zeta, model);
    };
    EquilibriumPoint out = bisect_balance(psi, kMuLowerBound, 1.0);
    out.q = finite_n_q(out.mu, demand, n, model);
    return out;
}

MeanFieldReport mean_field_report(double p, double d, const MarketConfig& model) {
    const auto& alloc = model.allocation;
    const auto& earn = model.earning;
    const EquilibriumPoint eq = solve_mu(p, 0.0, d, model);
    if (eq.degenerate) throw NumericalError("mean_field_report: degenerate equilibrium");

    MeanFieldReport rep;
    rep.p = p;
    rep.d = d;
    rep.mu = eq.mu;
    const double x = d / eq.mu;
    const double w = alloc.omega(x);
    const double wp = alloc.omega_prime(x);
    rep.q = w;

    const EarningPartials grad = earn.partials_at_ratio(p, x, alloc);
    const double theta = earn.earning_at_ratio(p, x, alloc);
    rep.Delta = grad.d_payment * model.choice.mean_prob_prime(theta);

    // Payment-equivalent of the rate partial; equals p for the identity map.
    const double effective_payment = w * grad.d_rate / grad.d_payment;
    rep.sigmaDelta = effective_payment * rep.Delta / eq.mu;
    rep.sigmaOmega = x * wp / w;
    rep.R = rep.sigmaDelta * rep.sigmaOmega;
    rep.muPrime = rep.Delta / (1.0 + rep.R);

    const double s = earn.settlement_multiplier(x, alloc);
    const double sp = earn.settlement_multiplier_prime(x, alloc);
    const double r = model.revenue.r(x, alloc);
    const double rp = model.revenue.r_prime(x, alloc);
    rep.u = (r - p * s * w) * eq.mu;
    rep.uPrime = rep.muPrime * (r - p * s * w - (rp - p * sp * w - p * s * wp) * x) - s * w * eq.mu;
    return rep;
}

double mean_field_utility(double p, double d, const MarketConfig& model) {
    return perturbed_utility(p, 0.0, d, model);
}

double perturbed_utility(double p, double zeta, double d, const MarketConfig& model) {
    const auto& alloc = model.allocation;
    const auto& earn = model.earning;
    const EquilibriumPoint eq = solve_mu(p, zeta, d, model);
    const double x = d / eq.mu;
    const double w = alloc.omega(x);
    const double s = earn.settlement_multiplier(x, alloc);
    double paid;  // E[P_i Z_i]
    if (zeta == 0.0) {
        paid = p * eq.mu;
    } else {
        const double up = model.choice.mean_prob(earn.earning_at_ratio(p + zeta, x, alloc));
        const double down = model.choice.mean_prob(earn.earning_at_ratio(p - zeta, x, alloc));
        paid = 0.5 * ((p + zeta) * up + (p - zeta) * down);
    }
    return model.revenue.r(x, alloc) * eq.mu - s * w * paid;
}

double population_utility(double p, const MarketConfig& model, const QuadratureRule& contexts,
                          double zeta) {
    return contexts.integrate([&](double d) { return perturbed_utility(p, zeta, d, model); });
}

namespace {

template <class F>
void for_each_binomial(double mu, std::int64_t n, F&& visit) {
    if (mu <= 0.0) {
        visit(std::int64_t{0}, 1.0);
        return;
    }
    if (mu >= 1.0) {
        visit(n, 1.0);
        return;
    }
    const double lmu = std::log(mu);
    const double l1mu = std::log1p(-mu);
    const double lnf = std::lgamma(static_cast<double>(n) + 1.0);
    for (std::int64_t k = 0; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double logp = lnf - std::lgamma(kd + 1.0) - std::lgamma(static_cast<double>(n - k) + 1.0) +
                            kd * lmu + static_cast<double>(n - k) * l1mu;
        if (logp < -745.0) continue;
        visit(k, std::exp(logp));
    }
}

void require_exact_n(std::int64_t n) {
    if (n < 1) throw DomainError("finite-n oracle: n must be >= 1");
    if (n > kMaxExactFiniteN) {
        throw DomainError("finite-n oracle: n exceeds exact-enumeration limit; use mean-field");
    }
}

}  // namespace

double finite_n_q(double mu, double demand, std::int64_t n, const MarketConfig& model) {
    require_exact_n(n);
    if (!(mu >= 0.0 && mu <= 1.0)) throw DomainError("finite_n_q: mu must lie in [0, 1]");
    double acc = 0.0;
    for_each_binomial(mu, n, [&](std::int64_t k, double pk) {
        acc += pk * model.allocation.prelimit(demand, static_cast<double>(k));
    });
    return acc;
}

double stein_dq(double mu, double demand, std::int64_t n, const MarketConfig& model) {
    require_exact_n(n);
    if (!(mu > 0.0 && mu < 1.0)) throw DomainError("stein_dq: mu must lie in (0, 1)");
    const double mean_x = static_cast<double>(n) * mu;
    double cross = 0.0;
    for_each_binomial(mu, n, [&](std::int64_t k, double pk) {
        const double g = model.allocation.prelimit(demand, static_cast<double>(k));
        cross += pk * g * (static_cast<double>(k) - mean_x);
    });
    return cross / (mu * (1.0 - mu));
}

ConcavityReport concavity_diagnostic(const MarketConfig& model, const PaymentInterval& interval,
                                     int grid_size) {
    if (!interval.bounded()) throw DomainError("concavity_diagnostic: interval must be bounded");
    if (grid_size < 3) throw DomainError("concavity_diagnostic: grid needs at least 3 points");
    ConcavityReport rep;
    const auto& alloc = model.allocation;
    const QuadratureRule contexts = model.context.expectation_rule();
    const double h = (interval.hi - interval.lo) / (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) {
        const double p = interval.lo + i * h;
        rep.grid.push_back(p);
        rep.utility.push_back(population_utility(p, model, contexts));
    }
    rep.worst_second_difference = -std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < grid_size; ++i) {
        const double sd = rep.utility[i + 1] - 2.0 * rep.utility[i] + rep.utility[i - 1];
        rep.worst_second_difference = std::max(rep.worst_second_difference, sd);
    }
    rep.utility_concave = rep.worst_second_difference < 0.0;
    rep.below_revenue_rate = interval.hi < model.revenue.gamma;

    // Premises and bounds over a spread of contexts.
    std::vector<double> ds;
    if (model.context.is_point_mass()) {
        ds.push_back(model.context.mean());
    } else {
        const double qlo = model.context.quantile(1e-4);
        const double qhi = model.context.quantile(1.0 - 1e-4);
        const int nd = 21;
        for (int j = 0; j < nd; ++j) ds.push_back(qlo + (qhi - qlo) * j / (nd - 1));
    }
    rep.choice_concave = true;
    rep.choice_intercept = true;
    rep.allocation_concave = true;
    rep.sigma = std::numeric_limits<double>::infinity();
    for (double d : ds) {
        std::vector<double> u_d;
        double x_lo = std::numeric_limits<double>::infinity();
        double x_hi = 0.0;
        double ratio_lo = std::numeric_limits<double>::infinity();
        double ratio_hi = 0.0;
        for (double p : rep.grid) {
            const MeanFieldReport mf = mean_field_report(p, d, model);
            u_d.push_back(mf.u);
            rep.gradient_bound = std::max(rep.gradient_bound, std::abs(mf.uPrime));
            const double ratio = d / mf.mu;
            const double theta = model.earning.earning_at_ratio(p, ratio, alloc);
            x_lo = std::min(x_lo, theta);
            x_hi = std::max(x_hi, theta);
            ratio_lo = std::min(ratio_lo, ratio);
            ratio_hi = std::max(ratio_hi, ratio);
        }
        for (int i = 1; i + 1 < grid_size; ++i) {
            const double curv = -(u_d[i + 1] - 2.0 * u_d[i] + u_d[i - 1]) / (h * h);
            rep.sigma = std::min(rep.sigma, curv);
        }
        const int nx = 64;
        for (int k = 0; k < nx; ++k) {
            const double x = x_lo + (x_hi - x_lo) * k / (nx - 1);
            if (!(model.choice.mean_prob_second(x) < 0.0)) rep.choice_concave = false;
            const double r = ratio_lo + (ratio_hi - ratio_lo) * k / (nx - 1);
            const double dr = 1e-5 * std::max(1.0, r);
            const double w2 = (alloc.omega_prime(r + dr) - alloc.omega_prime(std::max(r - dr, 0.0))) /
                              (r + dr - std::max(r - dr, 0.0));
            if (!(w2 < 0.0)) rep.allocation_concave = false;
        }
        if (model.choice.mean_prob(x_lo) - model.choice.mean_prob_prime(x_lo) * x_lo < 0.0) {
            rep.choice_intercept = false;
        }
    }
    rep.premises_hold = rep.choice_concave && rep.choice_intercept && rep.allocation_concave &&
                        rep.below_revenue_rate;
    rep.passed = rep.utility_concave;
    std::ostringstream msg;
    msg << "passed=" << rep.passed << " premises_hold=" << rep.premises_hold
        << " utility_concave=" << rep.utility_concave << " choice_concave=" << rep.choice_concave
        << " choice_intercept=" << rep.choice_intercept
        << " allocation_concave=" << rep.allocation_concave
        << " below_revenue_rate=" << rep.below_revenue_rate
        << " worst_second_difference=" << rep.worst_second_difference;
    rep.message = msg.str();
    return rep;
}

}  // namespace mfexp
