#pragma once

// Contract, market, fee and surrender-charge definitions plus the pointwise
// evaluators (fee rate, charge factor, reward, L) shared by every solver.
//
// Time is measured in years and all rates are per year.

#include "vastop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace vastop {

struct MarketParams {
    double r = 0.0;      ///< risk-free rate
    double sigma = 0.0;  ///< volatility, > 0

    void validate() const {
        if (!std::isfinite(r)) throw ConfigError("must be finite", "market.r");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("must be > 0", "market.sigma");
    }
};

struct ContractParams {
    double G = 0.0;   ///< guaranteed maturity amount
    double T = 0.0;   ///< maturity in years
    double F0 = 0.0;  ///< initial sub-account value

    void validate() const {
        // G = 0 is accepted as the degenerate "no guarantee" contract.
        if (!(G >= 0.0) || !std::isfinite(G)) throw ConfigError("must be >= 0", "contract.G");
        if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("must be > 0", "contract.T");
        if (!(F0 > 0.0) || !std::isfinite(F0)) throw ConfigError("must be > 0", "contract.F0");
    }
};

namespace detail {

/// Adaptive Simpson quadrature with an absolute tolerance.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol, int max_depth = 40) {
    struct Rec {
        const F& f;
        double run(double a, double b, double fa, double fm, double fb, double whole, double tol,
                   int depth) const {
            const double m = 0.5 * (a + b);
            const double lm = 0.5 * (a + m);
            const double rm = 0.5 * (m + b);
            const double flm = f(lm);
            const double frm = f(rm);
            const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            const double delta = left + right - whole;
            if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
            return run(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
                   run(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
        }
    };
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return Rec{f}.run(a, b, fa, fm, fb, whole, tol, max_depth);
}

inline double time_step(double t) { return std::max(1e-6, 1e-6 * std::abs(t)); }

// Second differences lose accuracy quickly, so they use a cube-root-of-epsilon step.
inline double second_step(double x) { return std::max(1e-4, 1e-4 * std::abs(x)); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Fees
// ---------------------------------------------------------------------------

enum class FeeKind { constant, piecewise, smooth_time, state_dependent };

namespace fee {

struct Constant {
    double rate = 0.0;
};

/// Right-continuous-from-the-left steps: rates[0] on [0, b0], rates[k] on (b_{k-1}, b_k],
/// last rate on (b_last, T].
struct Piecewise {
    std::vector<double> breakpoints;
    std::vector<double> rates;
};

/// c(t) = sum_k coefficients[k] * t^k
struct Polynomial {
    std::vector<double> coefficients;
};

/// c(t) = (3k/T)(1 - t/T)^2 / (1 - k(1 - t/T)^3), the largest fee compatible with a cubic
/// surrender charge of level k and no surrender incentive.
struct ChargeBound {
    double k = 0.0;
    double T = 0.0;
};

/// C(x) = low + (high - low) / (1 + exp((x - center) / width)); fee falls as the account grows.
struct Logistic {
    double low = 0.0;
    double high = 0.0;
    double center = 0.0;
    double width = 1.0;
};

/// Arbitrary bounded rate function of (t, x). `lipschitz` bounds |d/dx ((r - C) x)| - r.
struct GeneralState {
    std::function<double(double, double)> rate;
    double lipschitz = 0.0;
};

}  // namespace fee

class FeeSpec {
public:
    using Form = std::variant<fee::Constant, fee::Piecewise, fee::Polynomial, fee::ChargeBound,
                              fee::Logistic, fee::GeneralState>;

    FeeSpec() : form_(fee::Constant{0.0}) {}
    explicit FeeSpec(Form form) : form_(std::move(form)) {}

    static FeeSpec constant(double rate) { return FeeSpec(fee::Constant{rate}); }
    static FeeSpec piecewise(std::vector<double> breakpoints, std::vector<double> rates) {
        return FeeSpec(fee::Piecewise{std::move(breakpoints), std::move(rates)});
    }
    static FeeSpec polynomial(std::vector<double> coefficients) {
        return FeeSpec(fee::Polynomial{std::move(coefficients)});
    }
    static FeeSpec charge_bound(double k, double T) { return FeeSpec(fee::ChargeBound{k, T}); }
    static FeeSpec logistic(double low, double high, double center, double width) {
        return FeeSpec(fee::Logistic{low, high, center, width});
    }
    static FeeSpec general_state(std::function<double(double, double)> rate, double lipschitz) {
        return FeeSpec(fee::GeneralState{std::move(rate), lipschitz});
    }

    const Form& form() const noexcept { return form_; }

    FeeKind kind() const noexcept {
        switch (form_.index()) {
            case 0: return FeeKind::constant;
            case 1: return FeeKind::piecewise;
            case 2:
            case 3: return FeeKind::smooth_time;
            default: return FeeKind::state_dependent;
        }
    }

    bool time_only() const noexcept { return kind() != FeeKind::state_dependent; }

    /// Raw evaluation, no domain checks.
    double rate(double t, double x) const {
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, fee::Constant>) {
                    return f.rate;
                } else if constexpr (std::is_same_v<T, fee::Piecewise>) {
                    auto it = std::lower_bound(f.breakpoints.begin(), f.breakpoints.end(), t);
                    return f.rates[static_cast<std::size_t>(it - f.breakpoints.begin())];
                } else if constexpr (std::is_same_v<T, fee::Polynomial>) {
                    double acc = 0.0;
                    for (auto c = f.coefficients.rbegin(); c != f.coefficients.rend(); ++c) acc = acc * t + *c;
                    return acc;
                } else if constexpr (std::is_same_v<T, fee::ChargeBound>) {
                    const double u = 1.0 - t / f.T;
                    return (3.0 * f.k / f.T) * u * u / (1.0 - f.k * u * u * u);
                } else if constexpr (std::is_same_v<T, fee::Logistic>) {
                    return f.low + (f.high - f.low) / (1.0 + std::exp((x - f.center) / f.width));
                } else {
                    const double c = f.rate(t, x);
                    if (!(c >= 0.0 && c <= 1.0))
                        throw DomainError("state-dependent fee returned a rate outside [0,1]");
                    return c;
                }
            },
            form_);
    }

    /// Integral of c over [t, s] for time-only fees. Piecewise kinds are integrated exactly,
    /// smooth kinds by adaptive Simpson to 1e-12.
    double integral(double t, double s) const {
        if (!time_only()) throw UnsupportedError("fee integral requires a time-only fee");
        if (s < t) return -integral(s, t);
        return std::visit(
            [&](const auto& f) -> double {
                using T = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<T, fee::Constant>) {
                    return f.rate * (s - t);
                } else if constexpr (std::is_same_v<T, fee::Piecewise>) {
                    double acc = 0.0;
                    double lo = t;
                    for (std::size_t k = 0; k <= f.breakpoints.size() && lo < s; ++k) {
                        const double hi = k < f.breakpoints.size() ? f.breakpoints[k]
                                                                   : std::numeric_limits<double>::infinity();
                        if (hi <= lo) continue;
                        const double seg = std::min(hi, s);
                        acc += f.rates[k] * (seg - lo);
                        lo = seg;
                    }
                    return acc;
                } else if constexpr (std::is_same_v<T, fee::Polynomial> || std::is_same_v<T, fee::ChargeBound>) {
                    return detail::adaptive_simpson([&](double u) { return rate(u, 1.0); }, t, s, 1e-12);
                } else {
                    return 0.0;  // unreachable: guarded by time_only()
                }
            },
            form_);
    }

    /// Times in (0, T) where a piecewise fee jumps; empty for other kinds.
    std::vector<double> breakpoints() const {
        if (const auto* p = std::get_if<fee::Piecewise>(&form_)) return p->breakpoints;
        return {};
    }

    /// Checks the fee stays in [0,1] on [0,T] and the piecewise layout is consistent.
    void validate(double T) const {
        std::visit(
            [&](const auto& f) {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, fee::Constant>) {
                    if (!(f.rate >= 0.0 && f.rate <= 1.0)) throw ConfigError("must be in [0,1]", "fee.rate");
                } else if constexpr (std::is_same_v<F, fee::Piecewise>) {
                    if (f.rates.size() != f.breakpoints.size() + 1)
                        throw ConfigError("need exactly one more rate than breakpoints", "fee.rates");
                    for (std::size_t k = 0; k < f.breakpoints.size(); ++k) {
                        const double b = f.breakpoints[k];
                        if (!(b > 0.0 && b < T)) throw ConfigError("breakpoints must lie in (0,T)", "fee.breakpoints");
                        if (k > 0 && !(b > f.breakpoints[k - 1]))
                            throw ConfigError("breakpoints must be strictly increasing", "fee.breakpoints");
                    }
                    for (double c : f.rates)
                        if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("rates must be in [0,1]", "fee.rates");
                } else if constexpr (std::is_same_v<F, fee::Polynomial> || std::is_same_v<F, fee::ChargeBound>) {
                    if constexpr (std::is_same_v<F, fee::ChargeBound>) {
                        if (!(f.k > 0.0 && f.k < 1.0)) throw ConfigError("must be in (0,1)", "fee.k");
                        if (std::abs(f.T - T) > 1e-12 * T) throw ConfigError("must equal contract.T", "fee.T");
                    }
                    for (int i = 0; i <= 2000; ++i) {
                        const double c = rate(T * i / 2000.0, 1.0);
                        if (!(c >= 0.0 && c <= 1.0))
                            throw ConfigError("fee leaves [0,1] on [0,T]", "fee.coefficients");
                    }
                } else if constexpr (std::is_same_v<F, fee::Logistic>) {
                    if (!(f.low >= 0.0 && f.low <= 1.0)) throw ConfigError("must be in [0,1]", "fee.low");
                    if (!(f.high >= 0.0 && f.high <= 1.0)) throw ConfigError("must be in [0,1]", "fee.high");
                    if (!(f.width > 0.0)) throw ConfigError("must be > 0", "fee.width");
                } else {
                    if (!f.rate) throw ConfigError("missing rate function", "fee.rate");
                    if (!(f.lipschitz >= 0.0) || !std::isfinite(f.lipschitz))
                        throw ConfigError("must be a finite non-negative constant", "fee.lipschitz");
                }
            },
            form_);
    }

private:
    Form form_;
};

// ---------------------------------------------------------------------------
// Surrender charges
// ---------------------------------------------------------------------------

enum class ChargeKind { exponential, cubic, general_time, general_state };

namespace charge {

/// g(t) = exp(-kappa (T - t))
struct Exponential {
    double kappa = 0.0;
};

/// g(t) = 1 - k (1 - t/T)^3
struct Cubic {
    double k = 0.0;
};

struct GeneralTime {
    std::function<double(double)> g;
};

struct GeneralState {
    std::function<double(double, double)> g;
    bool second_derivative = true;  ///< false when g_xx cannot be trusted numerically
};

}  // namespace charge

/// Fraction g(t,x) of the account paid on surrender. Exact derivatives for the exponential and
/// cubic kinds; central differences for the general kinds.
class ChargeSpec {
public:
    using Form = std::variant<charge::Exponential, charge::Cubic, charge::GeneralTime, charge::GeneralState>;

    ChargeSpec() = default;
    ChargeSpec(Form form, double T) : form_(std::move(form)), T_(T) {}

    static ChargeSpec exponential(double kappa, double T) { return {charge::Exponential{kappa}, T}; }
    static ChargeSpec cubic(double k, double T) { return {charge::Cubic{k}, T}; }
    static ChargeSpec unit(double T) { return {charge::Exponential{0.0}, T}; }
    static ChargeSpec general_time(std::function<double(double)> g, double T) {
        return {charge::GeneralTime{std::move(g)}, T};
    }
    static ChargeSpec general_state(std::function<double(double, double)> g, double T, bool second = true) {
        return {charge::GeneralState{std::move(g), second}, T};
    }

    const Form& form() const noexcept { return form_; }
    double horizon() const noexcept { return T_; }

    ChargeKind kind() const noexcept { return static_cast<ChargeKind>(form_.index()); }
    bool time_only() const noexcept { return kind() != ChargeKind::general_state; }
    bool analytic_derivatives() const noexcept {
        return kind() == ChargeKind::exponential || kind() == ChargeKind::cubic;
    }
    bool has_second_derivative() const noexcept {
        const auto* s = std::get_if<charge::GeneralState>(&form_);
        return s == nullptr || s->second_derivative;
    }

    double value(double t, double x) const {
        double g = 0.0;
        switch (kind()) {
            case ChargeKind::exponential: g = std::exp(-std::get<0>(form_).kappa * (T_ - t)); break;
            case ChargeKind::cubic: {
                const double u = 1.0 - t / T_;
                g = 1.0 - std::get<1>(form_).k * u * u * u;
                break;
            }
            case ChargeKind::general_time: g = std::get<2>(form_).g(t); break;
            case ChargeKind::general_state: g = std::get<3>(form_).g(t, x); break;
        }
        if (!analytic_derivatives() && !(g > 0.0 && g <= 1.0))
            throw DomainError("surrender charge factor outside (0,1]");
        return g;
    }

    double dt(double t, double x) const {
        switch (kind()) {
            case ChargeKind::exponential: {
                const double kappa = std::get<0>(form_).kappa;
                return kappa * std::exp(-kappa * (T_ - t));
            }
            case ChargeKind::cubic: {
                const double u = 1.0 - t / T_;
                return 3.0 * std::get<1>(form_).k * u * u / T_;
            }
            default: {
                const double h = detail::time_step(t);
                const double lo = std::max(0.0, t - h);
                const double hi = std::min(T_, t + h);
                return (value(hi, x) - value(lo, x)) / (hi - lo);
            }
        }
    }

    double dx(double t, double x) const {
        if (time_only()) return 0.0;
        const double h = detail::time_step(x);
        const double lo = std::max(0.5 * x, x - h);
        return (value(t, x + h) - value(t, lo)) / (x + h - lo);
    }

    double dxx(double t, double x) const {
        if (time_only()) return 0.0;
        if (!has_second_derivative()) throw UnsupportedError("charge provides no second derivative in x");
        const double h = std::min(detail::second_step(x), 0.5 * x);
        return (value(t, x + h) - 2.0 * value(t, x) + value(t, x - h)) / (h * h);
    }

    void validate(double T) const {
        if (std::abs(T_ - T) > 1e-12 * T) throw ConfigError("charge horizon must equal contract.T", "charge");
        switch (kind()) {
            case ChargeKind::exponential:
                if (!(std::get<0>(form_).kappa >= 0.0) || !std::isfinite(std::get<0>(form_).kappa))
                    throw ConfigError("must be >= 0", "charge.kappa");
                break;
            case ChargeKind::cubic: {
                const double k = std::get<1>(form_).k;
                if (!(k >= 0.0 && k < 1.0)) throw ConfigError("must be in [0,1)", "charge.k");
                break;
            }
            case ChargeKind::general_time:
                if (!std::get<2>(form_).g) throw ConfigError("missing function", "charge.g");
                if (std::get<2>(form_).g(T) != 1.0) throw ConfigError("g(T) must equal 1", "charge.g");
                break;
            case ChargeKind::general_state:
                if (!std::get<3>(form_).g) throw ConfigError("missing function", "charge.g");
                for (double x : {1e-3, 1.0, 100.0, 1e4})
                    if (std::get<3>(form_).g(T, x) != 1.0) throw ConfigError("g(T,x) must equal 1", "charge.g");
                break;
        }
    }

private:
    Form form_ = charge::Exponential{0.0};
    double T_ = 1.0;
};

// ---------------------------------------------------------------------------
// Scenario and evaluators
// ---------------------------------------------------------------------------

struct Scenario {
    MarketParams market;
    ContractParams contract;
    FeeSpec fee;
    ChargeSpec charge;

    void validate() const {
        market.validate();
        contract.validate();
        fee.validate(contract.T);
        charge.validate(contract.T);
    }

    bool time_only() const noexcept { return fee.time_only() && charge.time_only(); }
};

namespace detail {

inline double checked_time(const Scenario& scn, double t) {
    const double T = scn.contract.T;
    if (!(t >= 0.0) || t > T * (1.0 + 1e-14)) throw DomainError("t outside [0,T]");
    return std::min(t, T);
}

inline void check_state(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("x must be positive and finite");
}

}  // namespace detail

/// C(t, x) in [0, 1].
inline double fee_rate(const Scenario& scn, double t, double x) {
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    return scn.fee.rate(t, x);
}

/// g(t, x) in (0, 1], equal to 1 at maturity.
inline double charge_factor(const Scenario& scn, double t, double x) {
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    if (t == scn.contract.T) return 1.0;
    return scn.charge.value(t, x);
}

/// Surrender value x g(t,x) before maturity, max(G, x) at maturity.
inline double reward(const Scenario& scn, double t, double x) {
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    if (t == scn.contract.T) return std::max(scn.contract.G, x);
    return x * scn.charge.value(t, x);
}

/// Drift of the discounted surrender value per unit of account:
/// g_t + (r - C + sigma^2) x g_x + (sigma^2 x^2 / 2) g_xx - C g.
inline double L_value(const Scenario& scn, double t, double x) {
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    if (t >= scn.contract.T) throw DomainError("L is defined on [0,T)");
    const double c = scn.fee.rate(t, x);
    const double g = scn.charge.value(t, x);
    const double gt = scn.charge.dt(t, x);
    if (scn.charge.time_only()) return gt - c * g;
    if (!scn.charge.has_second_derivative() && !scn.fee.time_only())
        throw UnsupportedError("state-dependent fee needs a charge with a second derivative");
    const double s2 = scn.market.sigma * scn.market.sigma;
    return gt + (scn.market.r - c + s2) * x * scn.charge.dx(t, x) + 0.5 * s2 * x * x * scn.charge.dxx(t, x) - c * g;
}

}  // namespace vastop
