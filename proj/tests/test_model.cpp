#include "vastop/model.hpp"
#include "vastop/scenarios.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace vastop;

TEST(FeeSpec, PiecewiseUsesPreviousRateAtBreakpoint) {
    const Scenario s = scenarios::fee_c1();
    EXPECT_DOUBLE_EQ(fee_rate(s, 0.0, 100.0), scenarios::kFeeHigh);
    EXPECT_DOUBLE_EQ(fee_rate(s, 5.0, 100.0), scenarios::kFeeHigh);
    EXPECT_DOUBLE_EQ(fee_rate(s, 5.0001, 100.0), scenarios::kFeeLow);
    EXPECT_DOUBLE_EQ(fee_rate(s, 10.0, 100.0), scenarios::kFeeLow);
    EXPECT_DOUBLE_EQ(fee_rate(s, 12.0, 100.0), scenarios::kFeeHigh);
}

TEST(FeeSpec, PiecewiseIntegralIsExact) {
    const Scenario s = scenarios::fee_c1();
    const double hi = scenarios::kFeeHigh, lo = scenarios::kFeeLow;
    EXPECT_NEAR(s.fee.integral(0.0, 15.0), 10.0 * hi + 5.0 * lo, 1e-15);
    EXPECT_NEAR(s.fee.integral(3.0, 7.0), 2.0 * hi + 2.0 * lo, 1e-15);
    EXPECT_NEAR(s.fee.integral(7.0, 3.0), -(2.0 * hi + 2.0 * lo), 1e-15);
    EXPECT_DOUBLE_EQ(s.fee.integral(6.0, 6.0), 0.0);
}

TEST(FeeSpec, SmoothIntegralsMatchClosedForms) {
    // c(t) = 0.01 + 0.002 t  ->  integral over [1,4] = 0.03 + 0.001 * 15
    const FeeSpec poly = FeeSpec::polynomial({0.01, 0.002});
    EXPECT_NEAR(poly.integral(1.0, 4.0), 0.045, 1e-12);
    // c = 3k/T u^2 / (1 - k u^3) has antiderivative ln(1 - k u^3) with u = 1 - t/T.
    const double k = 0.3, T = 10.0;
    const FeeSpec cb = FeeSpec::charge_bound(k, T);
    const auto G = [&](double t) { const double u = 1.0 - t / T; return std::log(1.0 - k * u * u * u); };
    EXPECT_NEAR(cb.integral(2.0, 7.0), G(7.0) - G(2.0), 1e-10);
}

TEST(FeeSpec, LogisticIsStateDependent) {
    const FeeSpec f = FeeSpec::logistic(0.005, 0.02, 100.0, 10.0);
    EXPECT_FALSE(f.time_only());
    EXPECT_NEAR(f.rate(0.0, 100.0), 0.0125, 1e-15);
    EXPECT_GT(f.rate(0.0, 50.0), f.rate(0.0, 150.0));
    EXPECT_THROW(f.integral(0.0, 1.0), UnsupportedError);
}

TEST(FeeSpec, ValidationReportsFields) {
    try {
        FeeSpec::piecewise({5.0, 3.0}, {0.01, 0.01, 0.01}).validate(15.0);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "fee.breakpoints");
    }
    EXPECT_THROW(FeeSpec::piecewise({5.0}, {0.01}).validate(15.0), ConfigError);
    EXPECT_THROW(FeeSpec::piecewise({15.0}, {0.01, 0.01}).validate(15.0), ConfigError);
    EXPECT_THROW(FeeSpec::constant(1.5).validate(15.0), ConfigError);
    EXPECT_THROW(FeeSpec::polynomial({0.5, 0.1}).validate(15.0), ConfigError);
    EXPECT_THROW(FeeSpec::charge_bound(0.2, 10.0).validate(15.0), ConfigError);
    EXPECT_NO_THROW(FeeSpec::polynomial({0.01, 0.001}).validate(15.0));
}

TEST(ChargeSpec, AnalyticDerivativesMatchFiniteDifferences) {
    const double T = 15.0;
    for (const ChargeSpec& c : {ChargeSpec::exponential(0.0055, T), ChargeSpec::cubic(0.4, T)}) {
        for (double t : {0.0, 3.3, 9.0, 14.5}) {
            const double h = 1e-5;
            const double fd = (c.value(t + h, 1.0) - c.value(t - h, 1.0)) / (2.0 * h);
            EXPECT_NEAR(c.dt(t, 1.0), fd, 1e-9) << "t=" << t;
        }
        EXPECT_DOUBLE_EQ(c.value(T, 50.0), 1.0);
        EXPECT_DOUBLE_EQ(c.dx(3.0, 50.0), 0.0);
        EXPECT_DOUBLE_EQ(c.dxx(3.0, 50.0), 0.0);
    }
}

TEST(ChargeSpec, GeneralStateUsesNumericalDerivatives) {
    const double T = 10.0;
    // g = 1 - 0.1 (1 - t/T) x/(x+100): g_x = -0.1 (1-t/T) 100/(x+100)^2
    const auto g = [T](double t, double x) { return 1.0 - 0.1 * (1.0 - t / T) * x / (x + 100.0); };
    const ChargeSpec c = ChargeSpec::general_state(g, T);
    c.validate(T);
    const double t = 4.0, x = 80.0;
    const double gx = -0.1 * (1.0 - t / T) * 100.0 / ((x + 100.0) * (x + 100.0));
    const double gxx = 0.1 * (1.0 - t / T) * 200.0 / std::pow(x + 100.0, 3);
    const double gt = 0.1 / T * x / (x + 100.0);
    EXPECT_NEAR(c.dx(t, x), gx, 1e-8);
    EXPECT_NEAR(c.dxx(t, x), gxx, 1e-7);
    EXPECT_NEAR(c.dt(t, x), gt, 1e-8);
    EXPECT_FALSE(c.time_only());
    const ChargeSpec no_second = ChargeSpec::general_state(g, T, false);
    EXPECT_THROW(no_second.dxx(t, x), UnsupportedError);
}

TEST(ChargeSpec, RejectsChargesNotEqualToOneAtMaturity) {
    EXPECT_THROW(ChargeSpec::general_time([](double) { return 0.9; }, 10.0).validate(10.0), ConfigError);
    EXPECT_THROW(ChargeSpec::cubic(1.0, 10.0).validate(10.0), ConfigError);
    EXPECT_THROW(ChargeSpec::exponential(0.01, 10.0).validate(12.0), ConfigError);
}

TEST(Scenario, ValidationNamesTheField) {
    Scenario s = scenarios::fee_c1();
    s.market.sigma = 0.0;
    try {
        s.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "market.sigma");
    }
    s = scenarios::fee_c1();
    s.contract.G = 0.0;
    EXPECT_NO_THROW(s.validate());
    s.contract.T = -1.0;
    EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Evaluators, RewardAndDomain) {
    const Scenario s = scenarios::fee_c1();
    EXPECT_DOUBLE_EQ(reward(s, 15.0, 80.0), 100.0);
    EXPECT_DOUBLE_EQ(reward(s, 15.0, 120.0), 120.0);
    EXPECT_DOUBLE_EQ(reward(s, 5.0, 80.0), 80.0 * std::exp(-0.0055 * 10.0));
    EXPECT_DOUBLE_EQ(charge_factor(s, 15.0, 80.0), 1.0);
    EXPECT_THROW(reward(s, -0.1, 80.0), DomainError);
    EXPECT_THROW(reward(s, 15.1, 80.0), DomainError);
    EXPECT_THROW(reward(s, 1.0, 0.0), DomainError);
    EXPECT_THROW(L_value(s, 15.0, 100.0), DomainError);
}

TEST(Evaluators, LSignFollowsFeeAgainstCharge) {
    // Exponential charge, time-only fee: L = (kappa - c) g.
    const Scenario c1 = scenarios::fee_c1();
    for (double t : {0.0, 2.5, 5.0}) EXPECT_LT(L_value(c1, t, 100.0), 0.0) << t;
    for (double t : {5.5, 7.5, 10.0}) EXPECT_GT(L_value(c1, t, 100.0), 0.0) << t;
    for (double t : {10.5, 14.9}) EXPECT_LT(L_value(c1, t, 100.0), 0.0) << t;
    const double t = 7.0;
    EXPECT_NEAR(L_value(c1, t, 100.0), (0.0055 - scenarios::kFeeLow) * std::exp(-0.0055 * 8.0), 1e-15);
    const Scenario kc = scenarios::trivial_kc();
    for (double s : {0.0, 7.0, 14.99}) EXPECT_NEAR(L_value(kc, s, 100.0), 0.0, 1e-16);
}

TEST(Evaluators, LForStateDependentChargeMatchesDefinition) {
    // Independent evaluation of g_t + (r - c + s^2) x g_x + s^2 x^2/2 g_xx - c g by finite differences.
    const double T = 10.0;
    const auto g = [T](double t, double x) { return 1.0 - 0.1 * (1.0 - t / T) * x / (x + 100.0); };
    Scenario s;
    s.market = {0.03, 0.2};
    s.contract = {100.0, T, 100.0};
    s.fee = FeeSpec::constant(0.01);
    s.charge = ChargeSpec::general_state(g, T);
    const double t = 3.0, x = 90.0, h = 1e-3;
    const double gt = (g(t + h, x) - g(t - h, x)) / (2 * h);
    const double gx = (g(t, x + h) - g(t, x - h)) / (2 * h);
    const double gxx = (g(t, x + h) - 2 * g(t, x) + g(t, x - h)) / (h * h);
    const double expect = gt + (0.03 - 0.01 + 0.04) * x * gx + 0.02 * x * x * gxx - 0.01 * g(t, x);
    EXPECT_NEAR(L_value(s, t, x), expect, 1e-7);
}
