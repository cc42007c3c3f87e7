#include "vastop/analytic.hpp"
#include "vastop/decompose.hpp"
#include "vastop/lattice.hpp"
#include "vastop/mc.hpp"
#include "vastop/philox.hpp"
#include "vastop/scenarios.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <limits>

using namespace vastop;

TEST(Philox, KnownAnswerVectors) {
    // Reference outputs of Random123's philox4x32-10.
    using C = Philox4x32::Counter;
    EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UniformsStayInsideOpenInterval) {
    EXPECT_GT(uniform_open(0, 0), 0.0);
    EXPECT_LT(uniform_open(0xffffffff, 0xffffffff), 1.0);
}

TEST(Philox, NormalPairsHaveUnitMoments) {
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    const std::size_t n = 200000;
    for (std::uint32_t i = 0; i < n / 2; ++i) {
        const auto [a, b] = normal_pair(Philox4x32::block({i, 7, 0, 0}, {42, 0}));
        for (double z : {a, b}) {
            s1 += z;
            s2 += z * z;
            s4 += z * z * z * z;
        }
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.01);
    EXPECT_NEAR(s4 / n, 3.0, 0.05);
}

TEST(Paths, RegeneratedPathsAreIdentical) {
    const PathBatch b(scenarios::fee_c1(), 11, 100, 30, PathScheme::exact_lognormal);
    std::vector<double> p1(31), p2(31);
    b.path(57, p1);
    b.path(57, p2);
    EXPECT_EQ(p1, p2);
    EXPECT_DOUBLE_EQ(p1[0], 100.0);
    b.path(58, p2);
    EXPECT_NE(p1, p2);
}

TEST(Paths, ExactLognormalAccountMartingale) {
    // E[e^{-rT} F_T] = F0 e^{-int c}: frozen-seed estimate within 4 standard errors.
    const Scenario s = scenarios::fee_c1();
    const PathBatch b(s, 3, 40000, 15, PathScheme::exact_lognormal);
    std::vector<double> p(16);
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < b.npaths(); ++k) {
        b.path(k, p);
        const double y = std::exp(-0.03 * 15.0) * p[15];
        sum += y;
        sq += y * y;
    }
    const double n = static_cast<double>(b.npaths());
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_NEAR(mean, 100.0 * std::exp(-s.fee.integral(0.0, 15.0)), 4.0 * se);
}

TEST(Paths, EulerNeedsNoTimeOnlyFee) {
    Scenario s = scenarios::l_negative();
    s.fee = FeeSpec::logistic(0.005, 0.02, 100.0, 10.0);
    EXPECT_THROW(PathBatch(s, 1, 10, 10, PathScheme::exact_lognormal), UnsupportedError);
    EXPECT_NO_THROW(PathBatch(s, 1, 10, 10, PathScheme::euler));
}

TEST(Estimators, MaturityBenefitAgainstClosedForm) {
    for (const Scenario& s : {scenarios::fee_c2(), scenarios::base(FeeSpec::constant(0.0), ChargeSpec::unit(15.0))}) {
        const PathBatch b(s, 20240601, 100000, 30, PathScheme::exact_lognormal);
        const McEstimate e = mc_maturity_benefit(b);
        EXPECT_EQ(e.npaths, 100000u);
        EXPECT_EQ(e.seed, 20240601u);
        EXPECT_NEAR(e.estimate, maturity_benefit_value(s, 0.0, 100.0), 3.0 * e.std_error);
    }
}

TEST(Philox, BoxMullerPairMatchesIndependentImplementation) {
    // Reference computed by a separate Python implementation of the same generator and transform.
    const auto [a, b] = normal_pair(Philox4x32::block({0, 0, 0, 0}, {7, 0}));
    EXPECT_NEAR(a, 0.22970816692959953, 1e-15);
    EXPECT_NEAR(b, 0.200414390432297, 1e-15);
}

TEST(Estimators, FrozenValuesForFixedSeed) {
    // Regression values for seed 7, 5000 paths, 30 steps (exact scheme); the estimate lies within
    // 1.5 standard errors of the closed form 100.0044.
    const PathBatch b(scenarios::fee_c1(), 7, 5000, 30, PathScheme::exact_lognormal);
    const McEstimate e = mc_maturity_benefit(b);
    EXPECT_NEAR(e.estimate, 101.48627968118754, 1e-9);
    EXPECT_NEAR(e.std_error, 1.021989133746777, 1e-11);
    const McEstimate again = mc_maturity_benefit(b);
    EXPECT_EQ(e.estimate, again.estimate);
}

TEST(Estimators, ResultsDoNotDependOnThreadCount) {
    const PathBatch b(scenarios::fee_c1(), 99, 20000, 30, PathScheme::exact_lognormal);
    setenv("VASTOP_THREADS", "1", 1);
    EXPECT_EQ(mc_threads(), 1u);
    const McEstimate one = mc_maturity_benefit(b);
    setenv("VASTOP_THREADS", "4", 1);
    const McEstimate four = mc_maturity_benefit(b);
    unsetenv("VASTOP_THREADS");
    EXPECT_EQ(one.estimate, four.estimate);
    EXPECT_EQ(one.std_error, four.std_error);
}

TEST(Estimators, StrategyWithNoExerciseIsMaturityBenefit) {
    const Scenario s = scenarios::fee_c1();
    const PathBatch b(s, 5, 20000, 30, PathScheme::exact_lognormal);
    Boundary never;
    never.tnodes = std::vector<double>(b.tnodes().begin(), b.tnodes().end() - 1);
    never.b.assign(30, std::numeric_limits<double>::infinity());
    never.index.assign(30, Boundary::npos);
    const McEstimate sv = mc_boundary_strategy_value(b, never);
    const McEstimate hb = mc_maturity_benefit(b);
    EXPECT_NEAR(sv.estimate, hb.estimate, 1e-10 * hb.estimate);
    Boundary immediate = never;
    immediate.b.assign(30, 0.0);
    immediate.index.assign(30, 0);
    const McEstimate now = mc_boundary_strategy_value(b, immediate);
    EXPECT_NEAR(now.estimate, reward(s, 0.0, 100.0), 1e-10);
    never.b.pop_back();
    EXPECT_THROW(mc_boundary_strategy_value(b, never), DomainError);
}

TEST(Estimators, PremiumIntegralsOnEmptyMaskReduceToPut) {
    const Scenario s = scenarios::fee_c1();
    const PathBatch b(s, 8, 50000, 30, PathScheme::exact_lognormal);
    RegionMask mask;
    mask.tnodes = b.tnodes();
    mask.xnodes = log_uniform_nodes(100.0, 20.0, 41);
    mask.in_surrender.assign(31 * 41, 0);
    const McPremiums p = mc_premium_integrals(b, mask);
    EXPECT_DOUBLE_EQ(p.e.estimate, 0.0);
    // f = put - int w E[e^{-rs} F_s] ds with E[e^{-rs} F_s] = F0 e^{-int_0^s c}.
    double integral = 0.0;
    const auto& t = b.tnodes();
    for (std::size_t n = 0; n < 30; ++n) {
        for (double u : {t[n], t[n + 1]}) {
            const double c = s.fee.rate(0.5 * (t[n] + t[n + 1]), 100.0);
            const double w = c * s.charge.value(u, 100.0) - s.charge.dt(u, 100.0);
            integral += 0.5 * (t[n + 1] - t[n]) * w * 100.0 * std::exp(-s.fee.integral(0.0, u));
        }
    }
    EXPECT_NEAR(p.f.estimate, guarantee_put_value(s, 0.0, 100.0) - integral, 3.0 * p.f.std_error);
}

TEST(Estimators, StandardErrorScalesWithPathCount) {
    const Scenario s = scenarios::fee_c2();
    const double se4 = mc_maturity_benefit(PathBatch(s, 1, 10000, 30, PathScheme::exact_lognormal)).std_error;
    const double se5 = mc_maturity_benefit(PathBatch(s, 1, 100000, 30, PathScheme::exact_lognormal)).std_error;
    EXPECT_NEAR(se4 / se5, std::sqrt(10.0), 0.2 * std::sqrt(10.0));
}

TEST(Estimators, EulerAgreesWithExactScheme) {
    const Scenario s = scenarios::fee_c1();
    const McEstimate ex = mc_maturity_benefit(PathBatch(s, 2, 100000, 360, PathScheme::exact_lognormal));
    const McEstimate eu = mc_maturity_benefit(PathBatch(s, 3, 100000, 360, PathScheme::euler));
    EXPECT_NEAR(ex.estimate, eu.estimate, 3.0 * std::hypot(ex.std_error, eu.std_error));
}

TEST(Estimators, PremiumIntegralsMatchQuadratureOnThresholdMask) {
    const Scenario s = scenarios::fee_c2();
    const std::size_t N = 180;
    const ValueSurface v = bermudan_value(build_chain(s, N, 401, 20.0), s, RewardKind::discontinuous);
    const RegionMask mask = extract_regions(v, s);
    const Boundary bd = extract_boundary(mask);
    const McPremiums p = mc_premium_integrals(PathBatch(s, 4, 100000, N, PathScheme::exact_lognormal), mask);
    const PremiumParts q = premium_parts(s, bd, 0.0, 100.0);
    // Node-resolution membership versus a continuous boundary adds a small quadrature mismatch.
    const double quad_tol = 0.01;
    EXPECT_NEAR(p.e.estimate, q.e, 3.0 * p.e.std_error + quad_tol);
    EXPECT_NEAR(p.f.estimate, q.f, 3.0 * p.f.std_error + quad_tol);
}

TEST(Estimators, FullMaskSatisfiesPremiumIdentity) {
    const Scenario s = scenarios::fee_c1();
    const PathBatch b(s, 6, 100000, 60, PathScheme::exact_lognormal);
    RegionMask mask;
    mask.tnodes = b.tnodes();
    mask.xnodes = log_uniform_nodes(100.0, 20.0, 41);
    mask.in_surrender.assign(61 * 41, 1);
    const McPremiums p = mc_premium_integrals(b, mask);
    const double phi = reward(s, 0.0, 100.0);
    const double h = maturity_benefit_value(s, 0.0, 100.0);
    // Paths below the lowest mask node fall outside; with x_min = F0/20 their weight is negligible.
    EXPECT_NEAR(p.e.estimate - p.f.estimate, phi - h, 3.0 * (p.e.std_error + p.f.std_error));
}
