#pragma once

// Surrender premium e = v - h and continuation premium f = v - phi evaluated from their
// integral representations for threshold-shaped regions S_t = [b(t), inf):
//
//   e(t,x) = int_t^T (c g - g_t)(s) E[e^{-r(s-t)} F_s 1{F_s >= b(s)}] ds
//   f(t,x) = put(t,x) + int_t^T (g_t - c g)(s) E[e^{-r(s-t)} F_s 1{F_s < b(s)}] ds
//
// b is piecewise constant at the left time node and +inf on empty sections. Both integrals are
// accumulated in one pass from the same truncated expectations, so e - f = phi - h up to the
// accuracy of the untruncated integral, which has the closed form x g(t) - x e^{-int c}.
// Here phi is x g(t, x) on all of [0, T], so that v = x g + f holds on the terminal slice too.

#include "vastop/analytic.hpp"
#include "vastop/model.hpp"
#include "vastop/region.hpp"
#include "vastop/surface.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace vastop {

struct PremiumParts {
    double e = 0.0;  ///< surrender premium
    double f = 0.0;  ///< continuation premium
    double h = 0.0;  ///< maturity benefit value
    double phi = 0.0;  ///< x g(t, x); equals x at t = T, the left limit of the reward
};

namespace detail {

inline void check_boundary_covers(const Scenario& scn, const Boundary& bd) {
    if (bd.tnodes.empty() || bd.tnodes.front() != 0.0 || bd.b.size() != bd.tnodes.size())
        throw DomainError("premium integrals need a boundary on a time grid starting at 0");
    if (!(bd.tnodes.back() < scn.contract.T)) throw DomainError("boundary time grid must lie in [0,T)");
}

/// Index of the boundary section in force at time s (left-node convention).
inline std::size_t boundary_section(const Boundary& bd, double s) {
    const auto it = std::upper_bound(bd.tnodes.begin(), bd.tnodes.end(), s);
    return static_cast<std::size_t>(it - bd.tnodes.begin()) - 1;
}

}  // namespace detail

/// Both premiums at (t, x) for a time-only scenario and a node-resolution boundary.
inline PremiumParts premium_parts(const Scenario& scn, const Boundary& bd, double t, double x) {
    if (!scn.time_only()) throw UnsupportedError("premium quadrature needs a time-only fee and charge");
    detail::check_boundary_covers(scn, bd);
    t = detail::checked_time(scn, t);
    detail::check_state(x);
    const double T = scn.contract.T;
    const auto parts = maturity_benefit_parts(scn, t, x);
    PremiumParts out;
    out.h = parts.value();
    out.phi = x * scn.charge.value(t, x);
    if (t == T) {
        out.f = parts.put;
        return out;
    }

    double above = 0.0;  // int w(s) E[F_s 1{F_s >= b}] ds
    double total = 0.0;  // int w(s) E[F_s] ds
    std::size_t k = detail::boundary_section(bd, t);
    double a = t;
    bool first = true;
    while (a < T) {
        const double end = k + 1 < bd.tnodes.size() ? bd.tnodes[k + 1] : T;
        const double K = bd.b[k];
        auto weight = [&](double s) { return scn.fee.rate(s, x) * scn.charge.value(s, x) - scn.charge.dt(s, x); };
        auto full = [&](double s) { return weight(s) * truncated_account_expectation(scn, {t, s, x, 0.0}); };
        total += boost::math::quadrature::gauss<double, 8>::integrate(full, a, end);
        if (std::isfinite(K)) {
            auto trunc = [&](double s) { return weight(s) * truncated_account_expectation(scn, {t, s, x, K}); };
            // Near s = t the truncated expectation approaches a step in x; refine adaptively there.
            above += first ? boost::math::quadrature::gauss_kronrod<double, 15>::integrate(trunc, a, end, 8, 1e-12)
                           : boost::math::quadrature::gauss<double, 8>::integrate(trunc, a, end);
        }
        a = end;
        ++k;
        first = false;
    }
    out.e = above;
    out.f = parts.put - (total - above);
    return out;
}

inline double surrender_premium(const Scenario& scn, const Boundary& bd, double t, double x) {
    return premium_parts(scn, bd, t, x).e;
}

inline double continuation_premium(const Scenario& scn, const Boundary& bd, double t, double x) {
    return premium_parts(scn, bd, t, x).f;
}

struct DecompositionOptions {
    double x_lo_mult = 0.25;  ///< interior window [F0 * x_lo_mult, F0 * x_hi_mult]
    double x_hi_mult = 4.0;
    std::size_t t_stride = 1;
    std::size_t x_stride = 1;
    double tolerance = -1.0;  ///< flag threshold on |residual|; negative selects 5e-3 * G
};

struct DecompositionRow {
    double t, x, v, h, e, f, res_he, res_phif;
};

struct DecompositionReport {
    std::vector<DecompositionRow> rows;
    double max_abs_he = 0.0;
    double max_abs_phif = 0.0;
    double mean_abs_he = 0.0;   ///< over rows with t < T
    double mean_abs_phif = 0.0;
    double max_identity_error = 0.0;  ///< max |(e - f) - (phi - h)| / max(|phi - h|, G)
    double min_e = 0.0;
    double min_f = 0.0;
    std::size_t flagged = 0;    ///< rows with a residual above tolerance
    double tolerance = 0.0;
};

/// Residuals of v = h + e and v = phi + f on the surface nodes inside the interior window.
inline DecompositionReport decomposition_residuals(const ValueSurface& surface, const Scenario& scn,
                                                   const Boundary& bd, const DecompositionOptions& opt = {}) {
    if (opt.t_stride < 1 || opt.x_stride < 1) throw ConfigError("strides must be >= 1", "decompose");
    DecompositionReport rep;
    const double G = scn.contract.G;
    rep.tolerance = opt.tolerance >= 0.0 ? opt.tolerance : 5e-3 * G;
    rep.min_e = rep.min_f = std::numeric_limits<double>::infinity();
    const double xlo = scn.contract.F0 * opt.x_lo_mult;
    const double xhi = scn.contract.F0 * opt.x_hi_mult;
    const std::size_t N = surface.steps();
    double sum_he = 0.0, sum_phif = 0.0;
    std::size_t interior = 0;
    std::vector<std::size_t> slices;
    for (std::size_t n = 0; n < N; n += opt.t_stride) slices.push_back(n);
    slices.push_back(N);
    for (std::size_t n : slices) {
        const double t = surface.tnodes[n];
        for (std::size_t i = 0; i < surface.size_x(); i += opt.x_stride) {
            const double x = surface.xnodes[i];
            if (x < xlo || x > xhi) continue;
            const PremiumParts p = premium_parts(scn, bd, t, x);
            DecompositionRow row{t, x, surface.values(n, i), p.h, p.e, p.f, 0.0, 0.0};
            row.res_he = row.v - p.h - p.e;
            row.res_phif = row.v - p.phi - p.f;
            rep.max_abs_he = std::max(rep.max_abs_he, std::abs(row.res_he));
            rep.max_abs_phif = std::max(rep.max_abs_phif, std::abs(row.res_phif));
            rep.max_identity_error = std::max(rep.max_identity_error,
                                              std::abs((p.e - p.f) - (p.phi - p.h)) / std::max(std::abs(p.phi - p.h), G));
            rep.min_e = std::min(rep.min_e, p.e);
            rep.min_f = std::min(rep.min_f, p.f);
            if (std::abs(row.res_he) > rep.tolerance || std::abs(row.res_phif) > rep.tolerance) ++rep.flagged;
            if (n < N) {
                sum_he += std::abs(row.res_he);
                sum_phif += std::abs(row.res_phif);
                ++interior;
            }
            rep.rows.push_back(row);
        }
    }
    if (interior > 0) {
        rep.mean_abs_he = sum_he / static_cast<double>(interior);
        rep.mean_abs_phif = sum_phif / static_cast<double>(interior);
    }
    return rep;
}

}  // namespace vastop
