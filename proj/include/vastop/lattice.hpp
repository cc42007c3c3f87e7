#pragma once

// Bermudan dynamic programming on a continuous-time Markov chain approximation of the
// sub-account. The chain lives on log-uniform state nodes; its generator matches the local
// drift (r - C) x and variance sigma^2 x^2 on every interior node, and the one-step
// transition matrix is the exact matrix exponential of the generator over one exercise
// interval.
//
// Boundary treatment: the lowest node reflects (its down-move is suppressed), the highest
// node is absorbing and carries a far-field value. For time-only fees the far field is the
// deep in-the-money asymptote v ~ W(t) x with W_n = max(g_n, e^{-c_n dt} W_{n+1}); for
// state-dependent fees it is linear extrapolation of the continuation value. Mass absorbed
// at the top keeps growing at rate r - c until the end of the step (a Feynman-Kac potential
// on the top state); without it the chain loses drift near x_max and the continuation value
// of linear payoffs is biased low there, which shows up as spurious surrender nodes.

#include "vastop/analytic.hpp"
#include "vastop/model.hpp"
#include "vastop/surface.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <map>
#include <utility>
#include <string>
#include <vector>

namespace vastop {

struct ChainOptions {
    bool allow_upwind = true;  ///< fall back to upwinded drift when central rates go negative
};

struct ChainGrid {
    std::vector<double> xnodes;
    std::vector<double> tnodes;
    double dt = 0.0;
    std::vector<Eigen::MatrixXd> transitions;   ///< distinct one-step matrices
    std::vector<Eigen::VectorXd> top_weights;   ///< per matrix: weight of the top node including drift growth
    std::vector<std::size_t> step_transition;   ///< step n -> index into transitions
    std::vector<double> top_growth;             ///< e^{-c(t_n) dt} per step; empty for state-dependent fees
    bool upwinded = false;                      ///< some node needed drift upwinding

    std::size_t steps() const noexcept { return tnodes.size() - 1; }
    std::size_t size_x() const noexcept { return xnodes.size(); }
    const Eigen::MatrixXd& transition(std::size_t n) const { return transitions[step_transition[n]]; }
    const Eigen::VectorXd& top_weight(std::size_t n) const { return top_weights[step_transition[n]]; }
};

namespace detail {

/// Generator of the birth-death chain for per-node fee rates `fee`.
inline Eigen::MatrixXd chain_generator(const std::vector<double>& x, const std::vector<double>& fee, double r,
                                       double sigma, const ChainOptions& opt, bool& upwinded) {
    const std::size_t M = x.size();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i + 1 < M; ++i) {
        const double mu = (r - fee[i]) * x[i];
        const double var = s2 * x[i] * x[i];
        const double hp = x[i + 1] - x[i];
        double up = 0.0;
        double dn = 0.0;
        if (i == 0) {
            up = std::max(mu, 0.0) / hp + 0.5 * var / (hp * hp);
        } else {
            const double hm = x[i] - x[i - 1];
            up = (var + mu * hm) / (hp * (hp + hm));
            dn = (var - mu * hp) / (hm * (hp + hm));
            if (up < 0.0 || dn < 0.0) {
                if (!opt.allow_upwind) {
                    const double dy = std::log(x[i + 1] / x[i]);
                    const double need = std::abs(r - fee[i]) > 0.0 ? s2 / std::abs(r - fee[i]) : dy;
                    const double span = std::log(x.back() / x.front());
                    const auto suggested = static_cast<std::size_t>(std::ceil(span / need)) + 1;
                    throw SolverError("negative transition rate at node " + std::to_string(i) +
                                      ": grid too coarse, try M >= " + std::to_string(suggested));
                }
                upwinded = true;
                up = var / (hp * (hp + hm)) + std::max(mu, 0.0) / hp;
                dn = var / (hm * (hp + hm)) + std::max(-mu, 0.0) / hm;
            }
        }
        const auto ii = static_cast<Eigen::Index>(i);
        Q(ii, ii + 1) = up;
        if (i > 0) Q(ii, ii - 1) = dn;
        Q(ii, ii) = -(up + dn);
    }
    return Q;
}

/// exp(Q dt) with the top state carrying growth rate `top_rate`. Returns the stochastic
/// matrix of the absorbing chain and, separately, the growth-weighted top column.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> stochastic_exp(Eigen::MatrixXd Q, double dt, double top_rate) {
    const Eigen::Index top = Q.rows() - 1;
    Q(top, top) = top_rate;
    Eigen::MatrixXd P = (Q * dt).exp();
    Eigen::VectorXd weight(P.rows());
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index j = 0; j < top; ++j) {
            if (P(i, j) < 0.0) P(i, j) = 0.0;
            sum += P(i, j);
        }
        weight(i) = std::max(P(i, top), 0.0);
        if (sum > 1.0) {
            P.row(i).head(top) /= sum;
            sum = 1.0;
        }
        P(i, top) = 1.0 - sum;
    }
    return {std::move(P), std::move(weight)};
}

}  // namespace detail

/// Builds N one-step transition matrices on M log-uniform nodes spanning [F0/mult, F0*mult].
/// Coefficients are frozen at the left endpoint t_n of each step, so fee breakpoints must be
/// time nodes.
inline ChainGrid build_chain(const Scenario& scn, std::size_t N, std::size_t M, double xmax_mult,
                             const ChainOptions& opt = {}) {
    scn.validate();
    const double T = scn.contract.T;
    check_breakpoint_alignment(scn.fee.breakpoints(), T, N);
    ChainGrid grid;
    grid.xnodes = log_uniform_nodes(scn.contract.F0, xmax_mult, M);
    grid.tnodes = uniform_times(T, N);
    grid.dt = T / static_cast<double>(N);
    grid.step_transition.resize(N);

    std::map<std::vector<double>, std::size_t> cache;
    std::vector<double> fee(M);
    for (std::size_t n = 0; n < N; ++n) {
        const double t = grid.tnodes[n];
        for (std::size_t i = 0; i < M; ++i) fee[i] = scn.fee.rate(t, grid.xnodes[i]);
        auto [it, inserted] = cache.try_emplace(fee, grid.transitions.size());
        if (inserted) {
            const auto Q = detail::chain_generator(grid.xnodes, fee, scn.market.r, scn.market.sigma, opt,
                                                   grid.upwinded);
            auto [P, w] = detail::stochastic_exp(Q, grid.dt, scn.market.r - fee[M - 1]);
            grid.transitions.push_back(std::move(P));
            grid.top_weights.push_back(std::move(w));
        }
        grid.step_transition[n] = it->second;
        if (scn.fee.time_only()) grid.top_growth.push_back(std::exp(-fee[0] * grid.dt));
    }
    return grid;
}

namespace detail {

inline double extrapolate_top(const std::vector<double>& x, const Eigen::VectorXd& v) {
    const auto M = static_cast<Eigen::Index>(x.size());
    const double slope = (v(M - 2) - v(M - 3)) / (x[M - 2] - x[M - 3]);
    return v(M - 2) + slope * (x[M - 1] - x[M - 2]);
}

/// One backward step of the no-exercise expectation, including the far-field top node.
inline Eigen::VectorXd expectation_step(const ChainGrid& grid, std::size_t n, double disc, const Eigen::VectorXd& next) {
    const Eigen::MatrixXd& P = grid.transition(n);
    const auto top = static_cast<Eigen::Index>(grid.size_x() - 1);
    Eigen::VectorXd out = P.leftCols(top) * next.head(top) + grid.top_weight(n) * next(top);
    out *= disc;
    if (!grid.top_growth.empty())
        out(top) = grid.top_growth[n] * next(top);
    else
        out(top) = extrapolate_top(grid.xnodes, out);
    return out;
}

}  // namespace detail

/// h on the chain: discounted expectation of max(G, F_T) without exercise.
inline Grid2D chain_maturity_benefit(const ChainGrid& grid, const Scenario& scn) {
    const std::size_t N = grid.steps();
    const std::size_t M = grid.size_x();
    const double disc = std::exp(-scn.market.r * grid.dt);
    Grid2D h(N + 1, M);
    Eigen::VectorXd next(static_cast<Eigen::Index>(M));
    for (std::size_t i = 0; i < M; ++i) next(static_cast<Eigen::Index>(i)) = h(N, i) = std::max(scn.contract.G, grid.xnodes[i]);
    for (std::size_t n = N; n-- > 0;) {
        next = detail::expectation_step(grid, n, disc, next);
        for (std::size_t i = 0; i < M; ++i) h(n, i) = next(static_cast<Eigen::Index>(i));
    }
    return h;
}

/// Backward induction for the Bermudan contract exercisable at the chain dates.
///
/// The discontinuous reward exercises for x g(t_n, x); the continuous reward exercises for
/// x g v h where h is the chain's own no-exercise value, which makes the two recursions
/// agree node for node.
inline ValueSurface bermudan_value(const ChainGrid& grid, const Scenario& scn, RewardKind kind) {
    const std::size_t N = grid.steps();
    const std::size_t M = grid.size_x();
    const double disc = std::exp(-scn.market.r * grid.dt);
    ValueSurface s;
    s.tnodes = grid.tnodes;
    s.xnodes = grid.xnodes;
    s.values = Grid2D(N + 1, M);
    s.continuation = Grid2D(N + 1, M);
    s.obstacle = Grid2D(N + 1, M);
    s.provenance = Provenance::lattice;
    s.reward_kind = kind;

    Grid2D h;
    if (kind == RewardKind::continuous) h = chain_maturity_benefit(grid, scn);

    Eigen::VectorXd next(static_cast<Eigen::Index>(M));
    for (std::size_t i = 0; i < M; ++i) {
        const double payoff = std::max(scn.contract.G, grid.xnodes[i]);
        s.values(N, i) = s.continuation(N, i) = s.obstacle(N, i) = payoff;
        next(static_cast<Eigen::Index>(i)) = payoff;
    }
    for (std::size_t n = N; n-- > 0;) {
        const double t = grid.tnodes[n];
        Eigen::VectorXd cont = detail::expectation_step(grid, n, disc, next);
        for (std::size_t i = 0; i < M; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            const double x = grid.xnodes[i];
            double ex = x * scn.charge.value(t, x);
            if (kind == RewardKind::continuous) ex = std::max(ex, h(n, i));
            s.obstacle(n, i) = ex;
            s.continuation(n, i) = cont(ii);
            next(ii) = s.values(n, i) = std::max(ex, cont(ii));
        }
    }
    return s;
}

struct ExtrapolationReport {
    std::vector<std::size_t> steps;
    std::vector<double> values;   ///< b_N(0, F0) per entry of steps
    std::vector<double> deltas;   ///< |b_{N_{k+1}} - b_{N_k}|
    double extrapolated = 0.0;    ///< first-order Richardson estimate of the American value
    bool convergence_warning = false;
    std::vector<ValueSurface> surfaces;  ///< filled when requested
};

/// Bermudan values at (0, F0) for an increasing sequence of exercise counts and a
/// Richardson estimate of their limit.
inline ExtrapolationReport american_extrapolate(const Scenario& scn, const std::vector<std::size_t>& Nseq,
                                                std::size_t M, double xmax_mult, bool keep_surfaces = false) {
    if (Nseq.size() < 3) throw ConfigError("need at least three exercise counts", "Nseq");
    for (std::size_t k = 1; k < Nseq.size(); ++k)
        if (Nseq[k] <= Nseq[k - 1]) throw ConfigError("exercise counts must increase", "Nseq");
    ExtrapolationReport rep;
    rep.steps = Nseq;
    for (std::size_t N : Nseq) {
        const ChainGrid grid = build_chain(scn, N, M, xmax_mult);
        ValueSurface surf = bermudan_value(grid, scn, RewardKind::discontinuous);
        rep.values.push_back(surf.value_at(0, scn.contract.F0));
        if (keep_surfaces) rep.surfaces.push_back(std::move(surf));
    }
    for (std::size_t k = 1; k < rep.values.size(); ++k) rep.deltas.push_back(std::abs(rep.values[k] - rep.values[k - 1]));
    const std::size_t K = rep.values.size();
    const double Na = static_cast<double>(Nseq[K - 2]);
    const double Nb = static_cast<double>(Nseq[K - 1]);
    rep.extrapolated = rep.values[K - 1] + (rep.values[K - 1] - rep.values[K - 2]) * Na / (Nb - Na);
    // Differences at round-off level (no early-exercise premium to resolve) are not a failure.
    const double noise = 1e-9 * std::max(std::abs(rep.values.back()), 1.0);
    rep.convergence_warning = rep.deltas.back() > noise && !(rep.deltas.back() < rep.deltas[rep.deltas.size() - 2]);
    return rep;
}

}  // namespace vastop
