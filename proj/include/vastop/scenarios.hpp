#pragma once

// Reference scenarios: the two-fee numerical experiment (r = 3%, sigma = 20%, F0 = G = 100,
// T = 15, exponential charge kappa = 0.55%), a scenario with L < 0 everywhere, and the trivial
// kappa = c case in which surrender is never optimal.

#include "vastop/model.hpp"

namespace vastop::scenarios {

inline constexpr double kFeeHigh = 0.010908;
inline constexpr double kFeeLow = 0.005454;
inline constexpr double kKappa = 0.0055;

inline Scenario base(FeeSpec fee, ChargeSpec charge) {
    Scenario s;
    s.market = {0.03, 0.2};
    s.contract = {100.0, 15.0, 100.0};
    s.fee = std::move(fee);
    s.charge = std::move(charge);
    return s;
}

/// High fee on [0,5] and (10,15], low fee on (5,10].
inline Scenario fee_c1() {
    return base(FeeSpec::piecewise({5.0, 10.0}, {kFeeHigh, kFeeLow, kFeeHigh}), ChargeSpec::exponential(kKappa, 15.0));
}

/// High fee on [0,10], low fee on (10,15].
inline Scenario fee_c2() {
    return base(FeeSpec::piecewise({10.0}, {kFeeHigh, kFeeLow}), ChargeSpec::exponential(kKappa, 15.0));
}

/// Constant 2% fee against kappa = 0.55%: L < 0 at every date.
inline Scenario l_negative() { return base(FeeSpec::constant(0.02), ChargeSpec::exponential(kKappa, 15.0)); }

/// kappa = c = 1%: L = 0 at every date.
inline Scenario trivial_kc(double c = 0.01) { return base(FeeSpec::constant(c), ChargeSpec::exponential(c, 15.0)); }

}  // namespace vastop::scenarios
