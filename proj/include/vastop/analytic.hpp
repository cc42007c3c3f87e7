#pragma once

// Closed forms available when the fee depends on time only: maturity-benefit value,
// truncated account expectations, the never-surrender check and the fee/charge
// constructions that remove the surrender incentive.

#include "vastop/model.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace vastop {

/// Standard normal CDF through the C library erfc, accurate to a few ulp in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2; }

namespace detail {

inline void require_time_only_fee(const Scenario& scn, const char* what) {
    if (!scn.fee.time_only())
        throw UnsupportedError(std::string(what) + " has no closed form for state-dependent fees");
}

}  // namespace detail

/// Pieces of the maturity benefit value x e^{-I} Phi(d1) + G e^{-r tau} Phi(-d2).
struct MaturityBenefitParts {
    double account = 0.0;  ///< x e^{-int c} Phi(d1)
    double floor = 0.0;    ///< G e^{-r tau} Phi(-d2)
    double put = 0.0;      ///< E[e^{-r tau} (G - F_T)_+]

    double value() const noexcept { return account + floor; }
};

inline MaturityBenefitParts maturity_benefit_parts(const Scenario& scn, double t, double x) {
    detail::require_time_only_fee(scn, "maturity_benefit_value");
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    const double T = scn.contract.T;
    const double G = scn.contract.G;
    MaturityBenefitParts parts;
    if (t == T) {
        parts.account = x >= G ? x : 0.0;
        parts.floor = x >= G ? 0.0 : G;
        parts.put = std::max(G - x, 0.0);
        return parts;
    }
    const double tau = T - t;
    const double fee_int = scn.fee.integral(t, T);
    const double acc = x * std::exp(-fee_int);
    const double disc_g = G * std::exp(-scn.market.r * tau);
    if (G == 0.0) {
        parts.account = acc;
        return parts;
    }
    const double vol = scn.market.sigma * std::sqrt(tau);
    const double d1 = (std::log(x / G) + scn.market.r * tau - fee_int + 0.5 * vol * vol) / vol;
    const double d2 = d1 - vol;
    parts.account = acc * norm_cdf(d1);
    parts.floor = disc_g * norm_cdf(-d2);
    parts.put = disc_g * norm_cdf(-d2) - acc * norm_cdf(-d1);
    return parts;
}

/// h(t,x) = E[e^{-r(T-t)} max(G, F_T)] given F_t = x.
inline double maturity_benefit_value(const Scenario& scn, double t, double x) {
    return maturity_benefit_parts(scn, t, x).value();
}

/// E[e^{-r(T-t)} (G - F_T)_+] given F_t = x.
inline double guarantee_put_value(const Scenario& scn, double t, double x) {
    return maturity_benefit_parts(scn, t, x).put;
}

struct TruncatedMomentQuery {
    double t = 0.0;  ///< start time
    double s = 0.0;  ///< end time, t <= s <= T
    double x = 0.0;  ///< account value at t
    double K = 0.0;  ///< truncation level, may be +infinity
};

/// E[e^{-r(s-t)} F_s 1{F_s >= K}] given F_t = x.
inline double truncated_account_expectation(const Scenario& scn, const TruncatedMomentQuery& q) {
    detail::require_time_only_fee(scn, "truncated_account_expectation");
    if (!(q.K >= 0.0)) throw DomainError("truncation level K must be >= 0");
    detail::checked_time(scn, q.t);
    detail::checked_time(scn, q.s);
    detail::check_state(q.x);
    if (q.s < q.t) throw DomainError("truncated expectation needs t <= s");
    if (q.K == std::numeric_limits<double>::infinity()) return 0.0;
    const double fee_int = scn.fee.integral(q.t, q.s);
    const double acc = q.x * std::exp(-fee_int);
    if (q.K == 0.0) return acc;
    const double tau = q.s - q.t;
    if (tau == 0.0) return q.x >= q.K ? q.x : 0.0;
    const double vol = scn.market.sigma * std::sqrt(tau);
    const double d1 = (std::log(q.x / q.K) + scn.market.r * tau - fee_int + 0.5 * vol * vol) / vol;
    return acc * norm_cdf(d1);
}

struct NeverSurrenderReport {
    bool holds = true;
    std::vector<std::pair<double, double>> violations;  ///< (t, x) nodes with L < 0
};

/// Absolute slack under which L counts as zero; L is a rate of order 1e-3 at desk scales.
inline constexpr double kLZeroTolerance = 1e-14;

/// Evaluates L on tgrid x xgrid and reports the nodes where it is negative.
inline NeverSurrenderReport never_surrender_check(const Scenario& scn, std::span<const double> tgrid,
                                                  std::span<const double> xgrid) {
    if (tgrid.empty() || xgrid.empty()) throw DomainError("never_surrender_check needs non-empty grids");
    NeverSurrenderReport rep;
    for (double t : tgrid) {
        if (t >= scn.contract.T) throw DomainError("never_surrender_check grid must lie in [0,T)");
        for (double x : xgrid) {
            if (L_value(scn, t, x) < -kLZeroTolerance) {
                rep.holds = false;
                rep.violations.emplace_back(t, x);
            }
        }
    }
    return rep;
}

/// Largest fee c(t) that keeps L >= 0 under the cubic charge g(t) = 1 - k(1 - t/T)^3.
inline double fee_bound_ex1b(double T, double k, double t) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("cubic charge level k must lie in (0,1)");
    if (!(T > 0.0)) throw DomainError("T must be positive");
    if (!(t >= 0.0 && t <= T)) throw DomainError("t outside [0,T]");
    const double u = 1.0 - t / T;
    return (3.0 * k / T) * u * u / (1.0 - k * u * u * u);
}

/// Smallest exponential charge rate kappa removing the surrender incentive under a constant fee c.
inline double charge_threshold_ex1a(double c) {
    if (!(c >= 0.0)) throw DomainError("fee rate must be >= 0");
    return c;
}

/// Upper bound on v from the maximal inequality for geometric Brownian motion, valid when the
/// fee is bounded below by fee_floor > 0. Diagnostic only.
inline double sharper_upper_bound(const Scenario& scn, double t, double x, double fee_floor) {
    if (!(fee_floor > 0.0)) throw DomainError("fee lower bound must be > 0");
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    const double s2 = scn.market.sigma * scn.market.sigma;
    const double a = s2 / (2.0 * fee_floor);
    const double rate = (s2 + 2.0 * fee_floor) * (s2 + 2.0 * fee_floor) / (2.0 * s2);
    return scn.contract.G + x * (1.0 + a - a * std::exp(-rate * (scn.contract.T - t) - 1.0));
}

}  // namespace vastop
