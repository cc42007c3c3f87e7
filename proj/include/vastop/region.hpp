#pragma once

// Surrender/continuation regions and the optimal surrender boundary extracted from a value
// surface, the L-sign classification of time sections, and region comparison.

#include "vastop/analytic.hpp"
#include "vastop/model.hpp"
#include "vastop/surface.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace vastop {

/// How a node is judged to belong to the surrender region.
enum class RegionRule {
    /// Exercise strictly beats continuing: obstacle - continuation > tol. Ties, where stopping
    /// and waiting are worth the same, count as continuation.
    dominance,
    /// Value touches the obstacle: value - obstacle <= tol. Ties count as surrender.
    gap,
};

inline const char* to_string(RegionRule r) { return r == RegionRule::dominance ? "dominance" : "gap"; }

struct RegionOptions {
    double tol_abs = -1.0;  ///< negative selects 1e-8 * G
    double tol_rel = 1e-6;
    RegionRule rule = RegionRule::dominance;
};

struct RegionMask {
    std::vector<double> tnodes;
    std::vector<double> xnodes;
    std::vector<std::uint8_t> in_surrender;  ///< row-major (time x state); terminal slice all 0
    double tol_abs = 0.0;
    double tol_rel = 0.0;
    RegionRule rule = RegionRule::dominance;
    RewardKind reward_kind = RewardKind::discontinuous;

    std::size_t size_x() const noexcept { return xnodes.size(); }
    bool at(std::size_t n, std::size_t i) const { return in_surrender[n * xnodes.size() + i] != 0; }

    std::size_t count(std::size_t n) const {
        std::size_t k = 0;
        for (std::size_t i = 0; i < xnodes.size(); ++i) k += at(n, i) ? 1 : 0;
        return k;
    }

    std::size_t count() const {
        std::size_t k = 0;
        for (auto b : in_surrender) k += b;
        return k;
    }
};

/// Classifies every node of [0,T) x xnodes; the terminal slice is never in the region.
inline RegionMask extract_regions(const ValueSurface& surface, const Scenario& scn, const RegionOptions& opt = {}) {
    RegionMask mask;
    mask.tnodes = surface.tnodes;
    mask.xnodes = surface.xnodes;
    mask.tol_abs = opt.tol_abs >= 0.0 ? opt.tol_abs : 1e-8 * scn.contract.G;
    mask.tol_rel = opt.tol_rel;
    mask.rule = opt.rule;
    mask.reward_kind = surface.reward_kind;
    const std::size_t N = surface.steps();
    const std::size_t M = surface.size_x();
    mask.in_surrender.assign((N + 1) * M, 0);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < M; ++i) {
            const double ob = surface.obstacle(n, i);
            const double tol = mask.tol_abs + mask.tol_rel * std::abs(ob);
            const bool in = opt.rule == RegionRule::dominance ? ob - surface.continuation(n, i) > tol
                                                              : surface.values(n, i) - ob <= tol;
            mask.in_surrender[n * M + i] = in ? 1 : 0;
        }
    }
    return mask;
}

struct Boundary {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    std::vector<double> tnodes;                ///< [0,T) only
    std::vector<double> b;                     ///< +infinity on empty sections
    std::vector<std::size_t> index;            ///< node index of b(t), npos when empty
    std::vector<std::pair<std::size_t, std::size_t>> violations;  ///< continuation nodes above b(t)

    bool empty(std::size_t n) const { return index[n] == npos; }
    bool threshold_shaped() const { return violations.empty(); }
};

/// b(t) = smallest surrender node per section. Continuation nodes above b(t) are reported as
/// structural violations rather than errors.
inline Boundary extract_boundary(const RegionMask& mask) {
    Boundary bd;
    const std::size_t N = mask.tnodes.size() - 1;
    const std::size_t M = mask.size_x();
    bd.tnodes.assign(mask.tnodes.begin(), mask.tnodes.end() - 1);
    bd.b.assign(N, std::numeric_limits<double>::infinity());
    bd.index.assign(N, Boundary::npos);
    for (std::size_t n = 0; n < N; ++n) {
        std::size_t i = 0;
        while (i < M && !mask.at(n, i)) ++i;
        if (i == M) continue;
        bd.b[n] = mask.xnodes[i];
        bd.index[n] = i;
        for (std::size_t j = i + 1; j < M; ++j)
            if (!mask.at(n, j)) bd.violations.emplace_back(n, j);
    }
    return bd;
}

/// Boundary with b(t) moved to the zero of the linearly interpolated exercise gap between the
/// last continuation node and b(t). For presentation; premium integrals use node resolution.
inline Boundary interpolate_boundary(const Boundary& bd, const ValueSurface& surface) {
    Boundary out = bd;
    for (std::size_t n = 0; n < bd.b.size(); ++n) {
        const std::size_t k = bd.index[n];
        if (k == Boundary::npos || k == 0) continue;
        const double g0 = surface.obstacle(n, k - 1) - surface.continuation(n, k - 1);
        const double g1 = surface.obstacle(n, k) - surface.continuation(n, k);
        if (g1 > g0 && g0 <= 0.0) {
            const double w = -g0 / (g1 - g0);
            out.b[n] = surface.xnodes[k - 1] + w * (surface.xnodes[k] - surface.xnodes[k - 1]);
        }
    }
    return out;
}

enum class SectionClass { empty, nonempty_conjectured, undetermined };

inline const char* to_string(SectionClass c) {
    switch (c) {
        case SectionClass::empty: return "empty";
        case SectionClass::nonempty_conjectured: return "nonempty-conjectured";
        default: return "undetermined";
    }
}

/// Predicts each section from the sign of L(t): positive or zero means empty, negative means
/// non-empty (a conjecture for local sign changes). The maturity date itself is undetermined.
inline std::vector<SectionClass> classify_sections(const Scenario& scn, std::span<const double> tgrid) {
    if (!scn.time_only()) throw UnsupportedError("classify_sections needs a time-only fee and charge");
    std::vector<SectionClass> out;
    out.reserve(tgrid.size());
    for (double t : tgrid) {
        if (t >= scn.contract.T) {
            detail::checked_time(scn, t);
            out.push_back(SectionClass::undetermined);
            continue;
        }
        const double L = L_value(scn, t, scn.contract.F0);
        out.push_back(L < -kLZeroTolerance ? SectionClass::nonempty_conjectured : SectionClass::empty);
    }
    return out;
}

struct RegionComparison {
    bool equal = true;
    std::vector<std::pair<std::size_t, std::size_t>> sym_diff_nodes;
};

inline RegionComparison compare_regions(const RegionMask& a, const RegionMask& b) {
    if (a.tnodes != b.tnodes || a.xnodes != b.xnodes)
        throw DomainError("compare_regions needs masks on the same grid");
    RegionComparison cmp;
    const std::size_t M = a.size_x();
    for (std::size_t k = 0; k < a.in_surrender.size(); ++k) {
        if (a.in_surrender[k] != b.in_surrender[k]) cmp.sym_diff_nodes.emplace_back(k / M, k % M);
    }
    cmp.equal = cmp.sym_diff_nodes.empty();
    return cmp;
}

struct SectionCheck {
    std::vector<double> empty_times;       ///< observed empty sections
    std::vector<double> failures;          ///< predicted empty but containing surrender nodes
    std::vector<double> warnings;          ///< predicted non-empty (conjecture) but observed empty
};

/// Confronts the observed mask with the L-sign prediction, section by section on [0,T).
inline SectionCheck check_sections(const RegionMask& mask, std::span<const SectionClass> predicted) {
    if (predicted.size() + 1 != mask.tnodes.size() && predicted.size() != mask.tnodes.size())
        throw DomainError("one prediction per time node is required");
    SectionCheck out;
    for (std::size_t n = 0; n + 1 < mask.tnodes.size(); ++n) {
        const bool empty = mask.count(n) == 0;
        const double t = mask.tnodes[n];
        if (empty) out.empty_times.push_back(t);
        if (predicted[n] == SectionClass::empty && !empty) out.failures.push_back(t);
        if (predicted[n] == SectionClass::nonempty_conjectured && empty) out.warnings.push_back(t);
    }
    return out;
}

}  // namespace vastop
