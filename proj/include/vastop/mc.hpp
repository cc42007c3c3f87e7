#pragma once

// Monte Carlo oracles on the exercise-date grid: maturity benefit, the value of the strategy
// "surrender at the first date the account reaches b(t)", and path-wise premium integrals over
// arbitrary region masks.
//
// Paths are never stored: a PathBatch is the recipe (scenario, seed, sizes, scheme) and any
// path is regenerated on demand from the Philox counter (step pair, path index). Estimators
// process paths in fixed chunks, sum each chunk pairwise and combine chunk sums in a fixed
// tree, so results do not depend on the number of worker threads.

#include "vastop/analytic.hpp"
#include "vastop/model.hpp"
#include "vastop/philox.hpp"
#include "vastop/region.hpp"
#include "vastop/surface.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace vastop {

enum class PathScheme { exact_lognormal, euler };

inline const char* to_string(PathScheme s) { return s == PathScheme::exact_lognormal ? "exact-lognormal" : "euler"; }

/// Worker count: hardware concurrency, capped by the VASTOP_THREADS environment variable.
inline unsigned mc_threads() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("VASTOP_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

class PathBatch {
public:
    PathBatch(Scenario scn, std::uint64_t seed, std::size_t npaths, std::size_t nsteps, PathScheme scheme)
        : scn_(std::move(scn)), seed_(seed), npaths_(npaths), nsteps_(nsteps), scheme_(scheme) {
        scn_.validate();
        if (npaths < 1) throw ConfigError("must be >= 1", "mc.npaths");
        if (nsteps < 1) throw ConfigError("must be >= 1", "mc.nsteps");
        if (scheme == PathScheme::exact_lognormal && !scn_.fee.time_only())
            throw UnsupportedError("exact-lognormal paths need a time-only fee; use the euler scheme");
        tnodes_ = uniform_times(scn_.contract.T, nsteps);
        const double dt = scn_.contract.T / static_cast<double>(nsteps);
        const double s2 = scn_.market.sigma * scn_.market.sigma;
        vol_ = scn_.market.sigma * std::sqrt(dt);
        log_drift_.resize(nsteps);
        for (std::size_t n = 0; n < nsteps; ++n) {
            const double t0 = tnodes_[n];
            const double t1 = tnodes_[n + 1];
            log_drift_[n] = scheme == PathScheme::exact_lognormal
                                ? scn_.market.r * dt - scn_.fee.integral(t0, t1) - 0.5 * s2 * dt
                                : (scn_.market.r - 0.5 * s2) * dt;
        }
    }

    const Scenario& scenario() const noexcept { return scn_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::size_t npaths() const noexcept { return npaths_; }
    std::size_t nsteps() const noexcept { return nsteps_; }
    PathScheme scheme() const noexcept { return scheme_; }
    const std::vector<double>& tnodes() const noexcept { return tnodes_; }

    /// Writes ln F at t_0..t_N of path p into out (size nsteps + 1).
    void log_path(std::size_t p, std::span<double> out) const {
        const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
        const auto plo = static_cast<std::uint32_t>(p);
        const auto phi = static_cast<std::uint32_t>(static_cast<std::uint64_t>(p) >> 32);
        const double dt = scn_.contract.T / static_cast<double>(nsteps_);
        double y = std::log(scn_.contract.F0);
        out[0] = y;
        std::pair<double, double> z{};
        for (std::size_t n = 0; n < nsteps_; ++n) {
            if (n % 2 == 0) z = normal_pair(Philox4x32::block({static_cast<std::uint32_t>(n / 2), plo, phi, 0u}, key));
            const double zn = n % 2 == 0 ? z.first : z.second;
            double drift = log_drift_[n];
            if (scheme_ == PathScheme::euler) drift -= scn_.fee.rate(tnodes_[n], std::exp(y)) * dt;
            y += drift + vol_ * zn;
            out[n + 1] = y;
        }
    }

    /// Writes F at t_0..t_N of path p into out (size nsteps + 1).
    void path(std::size_t p, std::span<double> out) const {
        log_path(p, out);
        out[0] = scn_.contract.F0;
        for (std::size_t n = 1; n < out.size(); ++n) out[n] = std::exp(out[n]);
    }

private:
    Scenario scn_;
    std::uint64_t seed_;
    std::size_t npaths_;
    std::size_t nsteps_;
    PathScheme scheme_;
    std::vector<double> tnodes_;
    std::vector<double> log_drift_;
    double vol_ = 0.0;
};

inline PathBatch simulate_paths(const Scenario& scn, std::uint64_t seed, std::size_t npaths, std::size_t nsteps,
                                PathScheme scheme) {
    return PathBatch(scn, seed, npaths, nsteps, scheme);
}

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t npaths = 0;
    std::uint64_t seed = 0;
};

namespace detail {

/// Pairwise (cascade) summation; deterministic for a given input order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

inline constexpr std::size_t kChunk = 4096;

/// Runs payoff(path, outputs) over all paths and returns, per output k, the sum and the sum
/// of squares. K outputs per path; the path holds ln F when `log_space` is set, F otherwise.
template <class Payoff>
std::vector<std::pair<double, double>> accumulate(const PathBatch& batch, std::size_t K, bool log_space,
                                                  Payoff payoff) {
    const std::size_t P = batch.npaths();
    const std::size_t chunks = (P + kChunk - 1) / kChunk;
    std::vector<double> sums(chunks * K), sqs(chunks * K);
    auto work = [&](unsigned worker, unsigned workers) {
        std::vector<double> F(batch.nsteps() + 1);
        std::vector<double> vals(kChunk * K), out(K);
        std::vector<double> col(kChunk), col2(kChunk);
        for (std::size_t c = worker; c < chunks; c += workers) {
            const std::size_t lo = c * kChunk;
            const std::size_t hi = std::min(P, lo + kChunk);
            for (std::size_t p = lo; p < hi; ++p) {
                if (log_space)
                    batch.log_path(p, F);
                else
                    batch.path(p, F);
                payoff(std::span<const double>(F), std::span<double>(out));
                for (std::size_t k = 0; k < K; ++k) vals[k * kChunk + (p - lo)] = out[k];
            }
            const std::size_t m = hi - lo;
            for (std::size_t k = 0; k < K; ++k) {
                for (std::size_t j = 0; j < m; ++j) {
                    col[j] = vals[k * kChunk + j];
                    col2[j] = col[j] * col[j];
                }
                sums[c * K + k] = pairwise_sum(std::span<const double>(col.data(), m));
                sqs[c * K + k] = pairwise_sum(std::span<const double>(col2.data(), m));
            }
        }
    };
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(mc_threads(), chunks));
    if (workers <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& th : pool) th.join();
    }
    std::vector<std::pair<double, double>> res(K);
    std::vector<double> a(chunks), b(chunks);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t c = 0; c < chunks; ++c) {
            a[c] = sums[c * K + k];
            b[c] = sqs[c * K + k];
        }
        res[k] = {pairwise_sum(a), pairwise_sum(b)};
    }
    return res;
}

inline McEstimate make_estimate(const PathBatch& batch, std::pair<double, double> s) {
    const double n = static_cast<double>(batch.npaths());
    McEstimate e;
    e.estimate = s.first / n;
    const double var = n > 1.0 ? std::max(0.0, (s.second - n * e.estimate * e.estimate) / (n - 1.0)) : 0.0;
    e.std_error = std::sqrt(var / n);
    e.npaths = batch.npaths();
    e.seed = batch.seed();
    return e;
}

}  // namespace detail

/// E[e^{-rT} max(G, F_T)] from the batch, at (0, F0).
inline McEstimate mc_maturity_benefit(const PathBatch& batch) {
    const Scenario& scn = batch.scenario();
    const double disc = std::exp(-scn.market.r * scn.contract.T);
    const double G = scn.contract.G;
    auto sums = detail::accumulate(batch, 1, true, [&](std::span<const double> y, std::span<double> out) {
        out[0] = disc * std::max(G, std::exp(y.back()));
    });
    return detail::make_estimate(batch, sums[0]);
}

/// Value of surrendering at the first date t_n < T with F >= b(t_n), holding to maturity
/// otherwise. A lower bound on v(0, F0) up to time discretisation.
inline McEstimate mc_boundary_strategy_value(const PathBatch& batch, const Boundary& boundary) {
    const Scenario& scn = batch.scenario();
    const std::size_t N = batch.nsteps();
    if (boundary.b.size() != N) throw DomainError("boundary must have one entry per exercise date before T");
    for (std::size_t n = 0; n < N; ++n)
        if (std::abs(boundary.tnodes[n] - batch.tnodes()[n]) > 1e-9 * scn.contract.T)
            throw DomainError("boundary dates do not match the path grid");
    std::vector<double> disc(N), log_b(N);
    for (std::size_t n = 0; n < N; ++n) {
        disc[n] = std::exp(-scn.market.r * batch.tnodes()[n]);
        log_b[n] = std::log(boundary.b[n]);  // +inf on empty sections
    }
    const double disc_T = std::exp(-scn.market.r * scn.contract.T);
    const double G = scn.contract.G;
    auto sums = detail::accumulate(batch, 1, true, [&](std::span<const double> y, std::span<double> out) {
        for (std::size_t n = 0; n < N; ++n) {
            if (y[n] >= log_b[n]) {
                const double F = std::exp(y[n]);
                out[0] = disc[n] * F * scn.charge.value(batch.tnodes()[n], F);
                return;
            }
        }
        out[0] = disc_T * std::max(G, std::exp(y[N]));
    });
    return detail::make_estimate(batch, sums[0]);
}

struct McPremiums {
    McEstimate e;
    McEstimate f;
};

/// Path averages of the surrender and continuation premium integrals at (0, F0) over an
/// arbitrary mask: e = int w(s) e^{-rs} F_s 1{(s,F_s) in S} ds, f = put + int -w(s) e^{-rs}
/// F_s 1{(s,F_s) not in S} ds with w = c g - g_t. Each exercise interval uses the mask of its
/// left date, evaluated at both ends by floor-node membership, and the trapezoid rule.
inline McPremiums mc_premium_integrals(const PathBatch& batch, const RegionMask& mask) {
    const Scenario& scn = batch.scenario();
    if (!scn.time_only()) throw UnsupportedError("premium integrals need a time-only fee and charge");
    const std::size_t N = batch.nsteps();
    if (mask.tnodes.size() != N + 1) throw DomainError("mask must share the path time grid");
    const auto& t = batch.tnodes();
    const double dt = scn.contract.T / static_cast<double>(N);
    const double x0 = scn.contract.F0;
    // Per interval: weights at the left and right ends, discount included.
    std::vector<double> wl(N), wr(N);
    for (std::size_t n = 0; n < N; ++n) {
        const double c = scn.fee.rate(0.5 * (t[n] + t[n + 1]), x0);
        wl[n] = 0.5 * dt * std::exp(-scn.market.r * t[n]) * (c * scn.charge.value(t[n], x0) - scn.charge.dt(t[n], x0));
        wr[n] = 0.5 * dt * std::exp(-scn.market.r * t[n + 1]) *
                (c * scn.charge.value(t[n + 1], x0) - scn.charge.dt(t[n + 1], x0));
    }
    const auto& xs = mask.xnodes;
    auto member = [&](std::size_t n, double x) {
        if (x < xs.front()) return false;
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        return mask.at(n, static_cast<std::size_t>(it - xs.begin()) - 1);
    };
    const double disc_T = std::exp(-scn.market.r * scn.contract.T);
    const double G = scn.contract.G;
    auto sums = detail::accumulate(batch, 2, false, [&](std::span<const double> F, std::span<double> out) {
        double in = 0.0, outside = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const double a = wl[n] * F[n];
            const double b = wr[n] * F[n + 1];
            (member(n, F[n]) ? in : outside) += a;
            (member(n, F[n + 1]) ? in : outside) += b;
        }
        out[0] = in;
        out[1] = disc_T * std::max(G - F[N], 0.0) - outside;
    });
    return {detail::make_estimate(batch, sums[0]), detail::make_estimate(batch, sums[1])};
}

}  // namespace vastop
