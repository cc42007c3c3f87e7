#pragma once

// Finite-difference solver for the variational inequality
//     max{ v_t + L_t v - r v, phi - v } = 0,   v(T, x) = max(G, x),
// written in y = ln x on a uniform grid. Time stepping is theta-weighted (Crank-Nicolson by
// default) with a Rannacher start; the obstacle is enforced at every step by projected SOR.
//
// Boundaries: at x_min the guarantee floor G e^{-r(T-t)}. At x_max, for time-only fees, the
// deep in-the-money asymptote v ~ W(t) x with W_n = max(g_n, e^{-c_n dt} W_{n+1}), which is
// the obstacle on sections where surrender is optimal far out and the discounted account
// otherwise; for state-dependent fees, linear extrapolation in x.

#include "vastop/model.hpp"
#include "vastop/region.hpp"
#include "vastop/surface.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vastop {

struct PsorSettings {
    double omega = 1.5;
    double tol = 0.0;          ///< absolute; 0 selects 1e-10 * G
    std::size_t max_iter = 10000;
};

struct PdeGrid {
    std::size_t N = 720;       ///< time steps
    std::size_t M = 401;       ///< state nodes
    double xmax_mult = 20.0;
    double theta = 0.5;
    std::size_t rannacher_steps = 2;  ///< leading steps replaced by two implicit half-steps each
    PsorSettings psor;

    void validate() const {
        if (N < 1) throw ConfigError("must be >= 1", "pde.N");
        if (M < 5) throw ConfigError("must be >= 5", "pde.M");
        if (!(xmax_mult > 1.0)) throw ConfigError("must be > 1", "pde.xmax_mult");
        if (!(theta >= 0.5 && theta <= 1.0)) throw ConfigError("must lie in [0.5, 1]", "pde.theta");
        if (!(psor.omega > 0.0 && psor.omega < 2.0)) throw ConfigError("must lie in (0, 2)", "pde.psor.omega");
        if (!(psor.tol >= 0.0)) throw ConfigError("must be >= 0", "pde.psor.tol");
        if (psor.max_iter < 1) throw ConfigError("must be >= 1", "pde.psor.max_iter");
    }
};

namespace detail {

/// Tridiagonal system lo[i] u[i-1] + di[i] u[i] + up[i] u[i+1] = rhs[i].
struct Tridiag {
    std::vector<double> lo, di, up;
    explicit Tridiag(std::size_t n) : lo(n, 0.0), di(n, 0.0), up(n, 0.0) {}

    std::vector<double> apply(const std::vector<double>& u) const {
        const std::size_t n = di.size();
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = di[i] * u[i];
            if (i > 0) s += lo[i] * u[i - 1];
            if (i + 1 < n) s += up[i] * u[i + 1];
            out[i] = s;
        }
        return out;
    }

    std::vector<double> solve(std::vector<double> rhs) const {
        const std::size_t n = di.size();
        std::vector<double> c(n);
        double denom = di[0];
        c[0] = up[0] / denom;
        rhs[0] /= denom;
        for (std::size_t i = 1; i < n; ++i) {
            denom = di[i] - lo[i] * c[i - 1];
            c[i] = up[i] / denom;
            rhs[i] = (rhs[i] - lo[i] * rhs[i - 1]) / denom;
        }
        for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
        return rhs;
    }
};

/// Rows of the spatial operator (1/2 s^2 d_yy + (r - C - s^2/2) d_y - r) on interior nodes.
inline Tridiag spatial_operator(const Scenario& scn, double t, const std::vector<double>& x, double dy) {
    const std::size_t M = x.size();
    Tridiag A(M);
    const double s2 = scn.market.sigma * scn.market.sigma;
    const double a = 0.5 * s2 / (dy * dy);
    for (std::size_t i = 1; i + 1 < M; ++i) {
        const double b = (scn.market.r - scn.fee.rate(t, x[i]) - 0.5 * s2) / (2.0 * dy);
        A.lo[i] = a - b;
        A.di[i] = -2.0 * a - scn.market.r;
        A.up[i] = a + b;
    }
    return A;
}

struct StepBoundary {
    double bottom = 0.0;
    std::optional<double> top;  ///< Dirichlet value, or nullopt for linear extrapolation
};

/// Linear system of one theta step over dt from `next`, the solution at the later time.
struct ThetaSystem {
    Tridiag lhs;
    std::vector<double> rhs;
};

inline ThetaSystem theta_system(const Tridiag& A, const std::vector<double>& next, double dt, double theta,
                                const StepBoundary& bc, const std::vector<double>& x) {
    const std::size_t M = next.size();
    ThetaSystem sys{Tridiag(M), std::vector<double>(M)};
    const std::vector<double> An = A.apply(next);
    for (std::size_t i = 1; i + 1 < M; ++i) {
        sys.lhs.lo[i] = -theta * dt * A.lo[i];
        sys.lhs.di[i] = 1.0 - theta * dt * A.di[i];
        sys.lhs.up[i] = -theta * dt * A.up[i];
        sys.rhs[i] = next[i] + (1.0 - theta) * dt * An[i];
    }
    sys.lhs.di[0] = 1.0;
    sys.rhs[0] = bc.bottom;
    if (bc.top) {
        sys.lhs.di[M - 1] = 1.0;
        sys.rhs[M - 1] = *bc.top;
    } else {
        // v_{M-1} = (1 + w) v_{M-2} - w v_{M-3} is substituted into row M-2; the top value
        // itself is filled in by finish_top after the solve.
        const double w = (x[M - 1] - x[M - 2]) / (x[M - 2] - x[M - 3]);
        const double k = sys.lhs.up[M - 2];
        sys.lhs.lo[M - 2] -= k * w;
        sys.lhs.di[M - 2] += k * (1.0 + w);
        sys.lhs.up[M - 2] = 0.0;
        sys.lhs.di[M - 1] = 1.0;
    }
    return sys;
}

inline void finish_top(std::vector<double>& u, const StepBoundary& bc, const std::vector<double>& x) {
    const std::size_t M = u.size();
    if (bc.top) {
        u[M - 1] = *bc.top;
    } else {
        const double w = (x[M - 1] - x[M - 2]) / (x[M - 2] - x[M - 3]);
        u[M - 1] = u[M - 2] + w * (u[M - 2] - u[M - 3]);
    }
}

/// Projected SOR for lhs u = rhs, u >= obstacle on the interior. Returns the iteration count.
inline std::size_t psor(const Tridiag& lhs, const std::vector<double>& rhs, const std::vector<double>& obstacle,
                        std::vector<double>& u, const StepBoundary& bc, const std::vector<double>& x,
                        const PsorSettings& s, double tol) {
    const std::size_t M = u.size();
    u[0] = bc.bottom;
    finish_top(u, bc, x);
    double change = std::numeric_limits<double>::infinity();
    for (std::size_t it = 1; it <= s.max_iter; ++it) {
        change = 0.0;
        for (std::size_t i = 1; i + 1 < M; ++i) {
            const double gs = (rhs[i] - lhs.lo[i] * u[i - 1] - lhs.up[i] * u[i + 1]) / lhs.di[i];
            const double nv = std::max(u[i] + s.omega * (gs - u[i]), obstacle[i]);
            change = std::max(change, std::abs(nv - u[i]));
            u[i] = nv;
        }
        finish_top(u, bc, x);
        if (change <= tol) return it;
    }
    throw SolverError("PSOR did not converge within " + std::to_string(s.max_iter) + " iterations", change);
}

}  // namespace detail

/// Solves the variational inequality on `grid`; the returned surface stores the obstacle
/// x g(t_n, x) (max(G, x) at T) and, as continuation, the unconstrained theta step.
/// Fee coefficients are frozen at the left endpoint of each step, like the lattice.
inline ValueSurface solve_variational_inequality(const Scenario& scn, const PdeGrid& grid) {
    scn.validate();
    grid.validate();
    const double T = scn.contract.T;
    const double G = scn.contract.G;
    check_breakpoint_alignment(scn.fee.breakpoints(), T, grid.N);
    const double tol = grid.psor.tol > 0.0 ? grid.psor.tol : 1e-10 * std::max(G, 1.0);

    ValueSurface s;
    s.provenance = Provenance::pde;
    s.reward_kind = RewardKind::discontinuous;
    s.heuristic = !scn.fee.time_only();
    s.xnodes = log_uniform_nodes(scn.contract.F0, grid.xmax_mult, grid.M);
    s.tnodes = uniform_times(T, grid.N);
    const std::size_t N = grid.N;
    const std::size_t M = grid.M;
    const auto& x = s.xnodes;
    const double dy = 2.0 * std::log(grid.xmax_mult) / static_cast<double>(M - 1);
    const double dt = T / static_cast<double>(N);
    s.values = Grid2D(N + 1, M);
    s.continuation = Grid2D(N + 1, M);
    s.obstacle = Grid2D(N + 1, M);

    std::vector<double> next(M), obstacle(M);
    for (std::size_t i = 0; i < M; ++i) next[i] = s.values(N, i) = s.continuation(N, i) = s.obstacle(N, i) = std::max(G, x[i]);

    const bool far_field = scn.fee.time_only();
    double W = 1.0;
    double B = G;
    for (std::size_t n = N; n-- > 0;) {
        const double t = s.tnodes[n];
        for (std::size_t i = 0; i < M; ++i) obstacle[i] = x[i] * scn.charge.value(t, x[i]);
        // Boundary values at t_n and, for the first of two Rannacher half-steps, at t_n + dt/2.
        detail::StepBoundary bc, bc_mid;
        const detail::Tridiag A = detail::spatial_operator(scn, t, x, dy);
        const bool rannacher = (N - 1 - n) < grid.rannacher_steps;
        // Deep in the money v = B(t) is flat in x; the operator maps constants to -r B, so B is
        // advanced by the scheme's factor for that rate (never below G e^{-r(T-t)}).
        const double r = scn.market.r;
        if (rannacher) {
            bc_mid.bottom = B / (1.0 + 0.5 * dt * r);
            B = bc_mid.bottom / (1.0 + 0.5 * dt * r);
        } else {
            B *= (1.0 - (1.0 - grid.theta) * dt * r) / (1.0 + grid.theta * dt * r);
        }
        bc.bottom = B;
        if (far_field) {
            // Far field v = W(t) x, with W advanced by the scheme's own factor for v proportional
            // to x so that the Dirichlet value matches what the interior rows propagate.
            const double lambda = A.lo[M - 2] * std::exp(-dy) + A.di[M - 2] + A.up[M - 2] * std::exp(dy);
            const double half = 1.0 / (1.0 - 0.5 * dt * lambda);
            double W_mid = W;
            if (rannacher) {
                W_mid = std::max(scn.charge.value(t + 0.5 * dt, x[M - 1]), half * W);
                W = std::max(scn.charge.value(t, x[M - 1]), half * W_mid);
            } else {
                const double full = (1.0 + (1.0 - grid.theta) * dt * lambda) / (1.0 - grid.theta * dt * lambda);
                W = std::max(scn.charge.value(t, x[M - 1]), full * W);
            }
            bc_mid.top = W_mid * x[M - 1];
            bc.top = W * x[M - 1];
        }

        // Unconstrained step: the continuation value.
        std::vector<double> cont = next;
        if (rannacher) {
            for (const auto* b : {&bc_mid, &bc}) {
                const auto sys = detail::theta_system(A, cont, 0.5 * dt, 1.0, *b, x);
                cont = sys.lhs.solve(sys.rhs);
                detail::finish_top(cont, *b, x);
            }
        } else {
            const auto sys = detail::theta_system(A, cont, dt, grid.theta, bc, x);
            cont = sys.lhs.solve(sys.rhs);
            detail::finish_top(cont, bc, x);
        }

        // Constrained step by PSOR, started from max(continuation, obstacle).
        std::vector<double> u(M);
        for (std::size_t i = 0; i < M; ++i) u[i] = std::max(cont[i], obstacle[i]);
        if (rannacher) {
            std::vector<double> half = next;
            for (const auto* b : {&bc_mid, &bc}) {
                const auto sys = detail::theta_system(A, half, 0.5 * dt, 1.0, *b, x);
                std::vector<double> w(M);
                for (std::size_t i = 0; i < M; ++i) w[i] = std::max(half[i], obstacle[i]);
                detail::psor(sys.lhs, sys.rhs, obstacle, w, *b, x, grid.psor, tol);
                half = std::move(w);
            }
            u = std::move(half);
        } else {
            const auto sys = detail::theta_system(A, next, dt, grid.theta, bc, x);
            detail::psor(sys.lhs, sys.rhs, obstacle, u, bc, x, grid.psor, tol);
        }
        for (std::size_t i = 0; i < M; ++i) {
            s.values(n, i) = u[i];
            s.continuation(n, i) = cont[i];
            s.obstacle(n, i) = obstacle[i];
        }
        next = std::move(u);
    }
    return s;
}

struct SmoothFitPoint {
    double t = 0.0;
    bool skipped = false;     ///< empty section or boundary too close to the grid edge
    double b = 0.0;
    double left_slope = 0.0;  ///< continuation side, between the two nodes below b(t)
    double right_slope = 0.0; ///< surrender side, between b(t) and the next node
    double jump = 0.0;
};

/// One-sided slopes of v on either side of b(t) and their absolute difference, per section.
inline std::vector<SmoothFitPoint> smooth_fit_diagnostic(const ValueSurface& surface, const Boundary& boundary) {
    if (boundary.tnodes.size() + 1 != surface.tnodes.size())
        throw DomainError("boundary and surface have different time grids");
    std::vector<SmoothFitPoint> out;
    const auto& x = surface.xnodes;
    for (std::size_t n = 0; n < boundary.tnodes.size(); ++n) {
        SmoothFitPoint p;
        p.t = boundary.tnodes[n];
        const std::size_t k = boundary.index[n];
        if (k == Boundary::npos || k < 2 || k + 1 >= x.size()) {
            p.skipped = true;
            out.push_back(p);
            continue;
        }
        p.b = x[k];
        p.left_slope = (surface.values(n, k - 1) - surface.values(n, k - 2)) / (x[k - 1] - x[k - 2]);
        p.right_slope = (surface.values(n, k + 1) - surface.values(n, k)) / (x[k + 1] - x[k]);
        p.jump = std::abs(p.right_slope - p.left_slope);
        out.push_back(p);
    }
    return out;
}

}  // namespace vastop
