#pragma once

#include "vastop/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vastop {

/// Dense row-major (time x state) array.
class Grid2D {
public:
    Grid2D() = default;
    Grid2D(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    bool empty() const noexcept { return data_.empty(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Provenance { lattice, pde };
enum class RewardKind { discontinuous, continuous };

inline const char* to_string(Provenance p) { return p == Provenance::lattice ? "lattice" : "pde"; }
inline const char* to_string(RewardKind k) { return k == RewardKind::discontinuous ? "discontinuous" : "continuous"; }

/// Value function sampled on (tnodes x xnodes).
///
/// `obstacle` holds the exercise value the solver compared against (x g, or x g v h for the
/// continuous reward; max(G, x) on the terminal slice). `continuation` holds the value of
/// not exercising at that node: the discounted one-step expectation on the lattice, the
/// unconstrained time step on the PDE grid. On the terminal slice it equals `values`.
struct ValueSurface {
    std::vector<double> tnodes;
    std::vector<double> xnodes;
    Grid2D values;
    Grid2D continuation;
    Grid2D obstacle;
    Provenance provenance = Provenance::lattice;
    RewardKind reward_kind = RewardKind::discontinuous;
    bool heuristic = false;  ///< solved outside the setting where the variational inequality is proven

    std::size_t steps() const noexcept { return tnodes.empty() ? 0 : tnodes.size() - 1; }
    std::size_t size_x() const noexcept { return xnodes.size(); }

    /// Index of the time node equal to t (within 1e-9 relative), or throws.
    std::size_t time_index(double t) const {
        const double T = tnodes.back();
        const double pos = t / T * static_cast<double>(steps());
        const double n = std::round(pos);
        if (n < 0.0 || n > static_cast<double>(steps()) || std::abs(pos - n) > 1e-9 * std::max(1.0, pos))
            throw DomainError("t = " + std::to_string(t) + " is not a time node of the surface");
        return static_cast<std::size_t>(n);
    }

    /// Value at time node n and arbitrary x, linear in x between nodes, flat outside the grid.
    double value_at(std::size_t n, double x) const { return interpolate(values.row(n), x); }

    double interpolate(std::span<const double> row, double x) const {
        if (x <= xnodes.front()) return row.front();
        if (x >= xnodes.back()) return row.back();
        const auto it = std::upper_bound(xnodes.begin(), xnodes.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xnodes.begin());
        const double w = (x - xnodes[i - 1]) / (xnodes[i] - xnodes[i - 1]);
        return (1.0 - w) * row[i - 1] + w * row[i];
    }
};

/// Log-uniform state nodes on [F0/mult, F0*mult]. For odd counts F0 is the middle node.
inline std::vector<double> log_uniform_nodes(double F0, double mult, std::size_t M) {
    if (M < 3) throw ConfigError("need at least 3 state nodes", "grid.M");
    if (!(mult > 1.0)) throw ConfigError("must be > 1", "grid.xmax_mult");
    std::vector<double> x(M);
    const double span = std::log(mult);
    for (std::size_t i = 0; i < M; ++i) {
        const double y = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(M - 1);
        x[i] = F0 * std::exp(y);
    }
    if (M % 2 == 1) x[M / 2] = F0;
    return x;
}

/// N+1 equally spaced dates t_n = n T / N.
inline std::vector<double> uniform_times(double T, std::size_t N) {
    if (N < 1) throw ConfigError("need at least one time step", "grid.N");
    std::vector<double> t(N + 1);
    for (std::size_t n = 0; n <= N; ++n) t[n] = T * static_cast<double>(n) / static_cast<double>(N);
    return t;
}

/// Throws ConfigError unless every fee breakpoint coincides with a time node.
inline void check_breakpoint_alignment(std::span<const double> breakpoints, double T, std::size_t N) {
    for (double b : breakpoints) {
        const double pos = b / T * static_cast<double>(N);
        if (std::abs(pos - std::round(pos)) > 1e-9 * std::max(1.0, pos))
            throw ConfigError("fee breakpoint " + std::to_string(b) + " does not fall on a time node for N = " +
                                  std::to_string(N),
                              "grid.N");
    }
}

}  // namespace vastop
