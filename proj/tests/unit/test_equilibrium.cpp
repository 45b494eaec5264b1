#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfexp/equilibrium.hpp"
#include "mfexp/errors.hpp"

using namespace mfexp;

namespace {

MarketConfig fig2() { return MarketConfig::at_fixed_demand(0.4); }

MarketConfig surge_model() {
    MarketConfig m = MarketConfig::defaults();
    m.earning = EarningFunction::surge();
    return m;
}

// Omega(D, X) with the X = 0 convention, used for brute-force expectations.
double big_omega(double demand, std::int64_t x, const AllocationCurve& w) {
    return x == 0 ? w.saturation() : w.omega(demand / static_cast<double>(x));
}

}  // namespace

TEST(SolveMu, VanishingPaymentGivesBaselineActivation) {
    const MarketConfig m = fig2();
    const auto eq = solve_mu(1e-6, 0.0, 0.4, m);
    EXPECT_NEAR(eq.mu, m.choice.mean_prob(0.0), 1e-8);
    EXPECT_GT(eq.mu, 0.0);
    EXPECT_FALSE(eq.degenerate);
}

TEST(SolveMu, MatchesIndependentReferenceValues) {
    // Frozen from tests/oracles/mean_field_reference.py (SciPy brentq + adaptive quad).
    const MarketConfig m = fig2();
    EXPECT_NEAR(solve_mu(20.0, 0.0, 0.4, m).mu, 0.429657171494, 1e-8);
    EXPECT_NEAR(mean_field_utility(20.0, 0.4, m), 28.927251853369, 1e-6);
    EXPECT_NEAR(solve_mu(17.0, 0.0, 0.4, m).mu, 0.387479646634, 1e-8);
    EXPECT_NEAR(mean_field_utility(17.0, 0.4, m), 28.573690975069, 1e-6);

    const MarketConfig s = surge_model();
    EXPECT_NEAR(solve_mu(20.0, 0.0, 0.4, s).mu, 0.450695286159, 1e-8);
    EXPECT_NEAR(mean_field_utility(20.0, 0.4, s), 28.826926399418, 1e-6);
}

TEST(SolveMu, ServedDemandBoundedByDemandAndCapacity) {
    const MarketConfig m = fig2();
    for (double p : {5.0, 17.0, 30.0, 60.0}) {
        const auto eq = solve_mu(p, 0.0, 0.4, m);
        ASSERT_GT(eq.mu, 0.0);
        ASSERT_LT(eq.mu, 1.0);
        const double served = eq.mu * m.allocation.omega(0.4 / eq.mu);
        EXPECT_LE(served, std::min(0.4, eq.mu) + 1e-15) << "p=" << p;
    }
}

TEST(SolveMu, ResidualTinyAndRootIndependentOfBracket) {
    const MarketConfig m = MarketConfig::defaults();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pay(10.0, 30.0), dem(0.1, 0.6), u01(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const double p = pay(rng);
        const double d = dem(rng);
        const auto ref = solve_mu(p, 0.0, d, m);
        EXPECT_LT(ref.residual, 1e-12);
        for (int r = 0; r < 5; ++r) {
            double a = kMuLowerBound + u01(rng) * ref.mu;
            double b = ref.mu + u01(rng) * (1.0 - ref.mu);
            const auto eq = solve_mu_in(p, 0.0, d, m, a, b);
            EXPECT_NEAR(eq.mu, ref.mu, 1e-13);
            EXPECT_LT(eq.residual, 1e-12);
        }
        // A bracket that misses the root falls back to the full interval.
        const auto miss = solve_mu_in(p, 0.0, d, m, ref.mu * 1.5 > 1 ? 0.99 : ref.mu * 1.5, 1.0);
        EXPECT_NEAR(miss.mu, ref.mu, 1e-13);
    }
}

TEST(SolveMu, BalanceMapIsNonIncreasing) {
    const MarketConfig m = MarketConfig::defaults();
    double prev = balance_map(1e-6, 20.0, 0.0, 0.3, m);
    for (double mu = 0.01; mu <= 1.0; mu += 0.01) {
        const double v = balance_map(mu, 20.0, 0.0, 0.3, m);
        EXPECT_LE(v, prev + 1e-15);
        prev = v;
    }
}

TEST(SolveMu, FlagsDegenerateWhenNoInteriorRoot) {
    MarketConfig m = fig2();
    m.choice = ChoiceFamily(1.0, LogNormalOutsideOption{1e6, 0.01});
    const auto eq = solve_mu(20.0, 0.0, 0.4, m);
    EXPECT_TRUE(eq.degenerate);
    EXPECT_EQ(eq.mu, kMuLowerBound);
    EXPECT_THROW(mean_field_report(20.0, 0.4, m), NumericalError);
}

TEST(SolveMu, RejectsInvalidArguments) {
    const MarketConfig m = fig2();
    EXPECT_THROW(solve_mu(20.0, 0.0, 0.0, m), DomainError);
    EXPECT_THROW(solve_mu(0.4, 0.5, 0.4, m), DomainError);
    EXPECT_THROW(solve_mu(20.0, -0.1, 0.4, m), DomainError);
}

TEST(MeanFieldReport, DerivativesMatchFiniteDifferences) {
    for (const MarketConfig& m : {fig2(), surge_model()}) {
        for (double d : {0.25, 0.4}) {
            for (int i = 0; i < 50; ++i) {
                const double p = 10.0 + 20.0 * i / 49.0;
                const double h = 1e-4;
                const auto rep = mean_field_report(p, d, m);
                const double fd_mu =
                    (solve_mu(p + h, 0.0, d, m).mu - solve_mu(p - h, 0.0, d, m).mu) / (2 * h);
                const double fd_u =
                    (mean_field_utility(p + h, d, m) - mean_field_utility(p - h, d, m)) / (2 * h);
                EXPECT_NEAR(rep.muPrime / fd_mu, 1.0, 1e-4) << "p=" << p << " d=" << d;
                EXPECT_NEAR(rep.uPrime, fd_u, 1e-4 * std::max(1.0, std::abs(fd_u)))
                    << "p=" << p << " d=" << d;
            }
        }
    }
}

TEST(MeanFieldReport, InterferenceDecomposition) {
    const MarketConfig m = fig2();
    for (double p : {10.0, 17.6, 25.0}) {
        const auto r = mean_field_report(p, 0.4, m);
        EXPECT_NEAR(r.R, r.sigmaDelta * r.sigmaOmega, 1e-14);
        EXPECT_NEAR(r.muPrime, r.Delta / (1.0 + r.R), 1e-14);
        EXPECT_GT(r.R, 0.0);
        EXPECT_LT(r.muPrime, r.Delta);
        // Marginal response: a unit of payment moves activation through f'.
        EXPECT_NEAR(r.Delta, r.q * m.choice.mean_prob_prime(p * r.q), 1e-14);
    }
}

TEST(MeanFieldReport, MatchingElasticityVanishesWhenDemandDominates) {
    const MarketConfig m = MarketConfig::defaults();
    double prev = 1.0;
    for (double d : {0.2, 1.0, 5.0, 50.0}) {
        const auto r = mean_field_report(20.0, d, m);
        EXPECT_LT(r.sigmaOmega, prev);
        prev = r.sigmaOmega;
    }
    EXPECT_LT(prev, 1e-3);
}

TEST(MeanFieldUtility, VanishesWhenPaymentEqualsRevenueRate) {
    const MarketConfig m = MarketConfig::defaults();
    for (double d : {0.2, 0.4}) EXPECT_NEAR(mean_field_utility(m.revenue.gamma, d, m), 0.0, 1e-12);
}

TEST(PerturbedUtility, ZeroPerturbationIsUnperturbed) {
    const MarketConfig m = fig2();
    EXPECT_NEAR(perturbed_utility(17.6, 0.0, 0.4, m), mean_field_utility(17.6, 0.4, m), 1e-13);
    EXPECT_LT(perturbed_utility(17.6, 0.5, 0.4, m), mean_field_utility(17.6, 0.4, m));
}

TEST(PerturbedUtility, CostOfRandomisationIsQuadraticInZeta) {
    const MarketConfig m = fig2();
    const double u0 = mean_field_utility(17.6, 0.4, m);
    std::vector<double> lx, ly;
    for (double z : {0.025, 0.05, 0.1, 0.2}) {
        lx.push_back(std::log(z));
        ly.push_back(std::log(u0 - perturbed_utility(17.6, z, 0.4, m)));
    }
    const double slope = (ly.back() - ly.front()) / (lx.back() - lx.front());
    EXPECT_NEAR(slope, 2.0, 0.1);
}

TEST(FiniteNQ, SingleSupplierIsOmega) {
    const MarketConfig m = fig2();
    EXPECT_NEAR(finite_n_q(1.0, 0.5, 1, m), m.allocation.omega(0.5), 1e-15);
}

TEST(FiniteNQ, MatchesDirectBinomialSum) {
    const MarketConfig m = fig2();
    const std::int64_t n = 40;
    const double mu = 0.5;
    const double demand = 16.0;
    double ref = 0.0;
    for (std::int64_t x = 0; x <= n; ++x) {
        const double logc = std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0);
        ref += std::exp(logc + x * std::log(mu) + (n - x) * std::log1p(-mu)) * big_omega(demand, x, m.allocation);
    }
    EXPECT_NEAR(finite_n_q(mu, demand, n, m), ref, 1e-13);
}

TEST(FiniteNQ, DecreasingInMu) {
    const MarketConfig m = fig2();
    double prev = 2.0;
    for (double mu = 0.05; mu < 1.0; mu += 0.05) {
        const double q = finite_n_q(mu, 16.0, 40, m);
        EXPECT_LT(q, prev) << mu;
        prev = q;
    }
}

TEST(FiniteNQ, ApproachesMeanFieldLimit) {
    const MarketConfig m = fig2();
    const double mu = 0.4;
    const double limit = m.allocation.omega(0.4 / mu);
    const double e3 = std::abs(finite_n_q(mu, 0.4 * 1000, 1000, m) - limit);
    const double e4 = std::abs(finite_n_q(mu, 0.4 * 10000, 10000, m) - limit);
    EXPECT_LT(e4, 1e-3);
    EXPECT_LT(e4, e3 / 5.0);
    EXPECT_THROW(finite_n_q(mu, 4e4, 100000, m), DomainError);
}

TEST(SteinDq, MatchesFiniteDifferenceAtReferencePoint) {
    const MarketConfig m = fig2();
    const double h = 1e-6;
    const double fd = (finite_n_q(0.5 + h, 16.0, 40, m) - finite_n_q(0.5 - h, 16.0, 40, m)) / (2 * h);
    EXPECT_NEAR(stein_dq(0.5, 16.0, 40, m), fd, 1e-7);
    EXPECT_LT(stein_dq(0.5, 16.0, 40, m), 0.0);
}

TEST(SteinDq, MatchesFiniteDifferenceOnRandomInstances) {
    MarketConfig m = fig2();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> nn(2, 60), ll(2, 12);
    std::uniform_real_distribution<double> mm(0.05, 0.95), dd(0.05, 2.0);
    for (int k = 0; k < 20; ++k) {
        const std::int64_t n = nn(rng);
        m.allocation = AllocationCurve(ll(rng));
        const double mu = mm(rng);
        const double demand = dd(rng) * n;
        const double h = 1e-6;
        const double fd = (finite_n_q(mu + h, demand, n, m) - finite_n_q(mu - h, demand, n, m)) / (2 * h);
        EXPECT_NEAR(stein_dq(mu, demand, n, m), fd, 1e-7) << "n=" << n << " mu=" << mu;
    }
}

TEST(SteinDq, SaturatedRegimeHasNoSlope) {
    const MarketConfig m = fig2();
    EXPECT_NEAR(stein_dq(0.5, 1e9, 20, m), 0.0, 1e-6);
    EXPECT_THROW(stein_dq(0.0, 16.0, 40, m), DomainError);
    EXPECT_THROW(stein_dq(1.0, 16.0, 40, m), DomainError);
}

TEST(ConcavityDiagnostic, PopulationUtilityConcaveOnPaymentRange) {
    const MarketConfig m = MarketConfig::defaults();
    const auto rep = concavity_diagnostic(m, PaymentInterval{10.0, 30.0}, 41);
    EXPECT_TRUE(rep.utility_concave);
    EXPECT_TRUE(rep.passed);
    EXPECT_LT(rep.worst_second_difference, 0.0);
    ASSERT_EQ(rep.grid.size(), 41u);
    ASSERT_EQ(rep.utility.size(), 41u);
    for (std::size_t i = 1; i + 1 < rep.utility.size(); ++i) {
        EXPECT_LT(rep.utility[i + 1] - 2 * rep.utility[i] + rep.utility[i - 1], 0.0);
    }
    EXPECT_GT(rep.gradient_bound, 0.0);
    EXPECT_TRUE(rep.below_revenue_rate);
    EXPECT_FALSE(rep.message.empty());
}

TEST(ConcavityDiagnostic, SurgeModelAlsoConcave) {
    const auto rep = concavity_diagnostic(surge_model(), PaymentInterval{10.0, 30.0}, 41);
    EXPECT_TRUE(rep.utility_concave);
}

TEST(ConcavityDiagnostic, RejectsUnboundedInterval) {
    EXPECT_THROW(concavity_diagnostic(MarketConfig::defaults(), PaymentInterval::unbounded(), 41),
                 DomainError);
}
