#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mfexp/context.hpp"
#include "mfexp/errors.hpp"
#include "mfexp/quadrature.hpp"

using namespace mfexp;

TEST(Quadrature, GaussLegendreIsExactForPolynomials) {
    const auto rule = gauss_legendre(8, -1.0, 3.0);
    // Degree 15 is the maximum exact degree for 8 nodes.
    auto poly = [](double x) { return std::pow(x, 15) - 3 * std::pow(x, 4) + 2; };
    const double exact = (std::pow(3.0, 16) - 1.0) / 16.0 - 3.0 * (std::pow(3.0, 5) + 1.0) / 5.0 + 8.0;
    EXPECT_NEAR(rule.integrate(poly), exact, 1e-7 * std::abs(exact));
}

TEST(Quadrature, CompositeRuleIntegratesSmoothFunction) {
    const auto rule = composite_gauss_legendre(10, 8, 0.0, M_PI);
    EXPECT_NEAR(rule.integrate([](double x) { return std::sin(x); }), 2.0, 1e-14);
}

TEST(Quadrature, LogisticRuleHasUnitMassAndKnownVariance) {
    const auto& rule = logistic_density_rule();
    // 8-node panels of width 2 against poles at +-i*pi: ~1e-13 error per panel.
    EXPECT_NEAR(rule.integrate([](double) { return 1.0; }), 1.0, 1e-12);
    EXPECT_NEAR(rule.integrate([](double y) { return y; }), 0.0, 1e-14);
    EXPECT_NEAR(rule.integrate([](double y) { return y * y; }), M_PI * M_PI / 3.0, 1e-11);
}

TEST(ContextModel, BetaMomentsFromExpectationRule) {
    const ContextModel ctx(BetaContext{15.0, 35.0}, DemandSampler::Poisson);
    const auto rule = ctx.expectation_rule(256);
    EXPECT_NEAR(rule.integrate([](double) { return 1.0; }), 1.0, 1e-14);
    EXPECT_NEAR(rule.integrate([](double d) { return d; }), 0.3, 1e-12);
    const double var = 15.0 * 35.0 / (50.0 * 50.0 * 51.0);
    EXPECT_NEAR(rule.integrate([](double d) { return (d - 0.3) * (d - 0.3); }), var, 1e-12);
    EXPECT_NEAR(ctx.mean(), 0.3, 1e-15);
    EXPECT_NEAR(ctx.quantile(0.5), 0.29731472417366456, 1e-12);
}

TEST(ContextModel, PointMassHasSingleNode) {
    const ContextModel ctx(PointContext{0.4}, DemandSampler::Deterministic);
    const auto rule = ctx.expectation_rule();
    ASSERT_EQ(rule.size(), 1u);
    EXPECT_EQ(rule.nodes[0], 0.4);
    std::mt19937_64 rng(1);
    EXPECT_EQ(ctx.sample_scaled_demand(rng), 0.4);
    EXPECT_EQ(ctx.sample_demand(1000, 0.4, rng), 400);
}

TEST(ContextModel, SamplersAreUnbiased) {
    const ContextModel ctx(BetaContext{15.0, 35.0}, DemandSampler::Poisson);
    std::mt19937_64 rng(7);
    const int draws = 200000;
    double sd = 0.0;
    double sD = 0.0;
    for (int i = 0; i < draws; ++i) {
        sd += ctx.sample_scaled_demand(rng);
        sD += static_cast<double>(ctx.sample_demand(1000, 0.4, rng)) / 1000.0;
    }
    const double se_d = std::sqrt(15.0 * 35.0 / (2500.0 * 51.0) / draws);
    const double se_D = std::sqrt(0.4 / 1000.0 / draws);
    EXPECT_NEAR(sd / draws, 0.3, 4 * se_d);
    EXPECT_NEAR(sD / draws, 0.4, 4 * se_D);
}

TEST(ContextModel, RejectsInvalidParameters) {
    EXPECT_THROW(ContextModel(BetaContext{-1.0, 2.0}, DemandSampler::Poisson), DomainError);
    EXPECT_THROW(ContextModel(PointContext{0.0}, DemandSampler::Poisson), DomainError);
}
