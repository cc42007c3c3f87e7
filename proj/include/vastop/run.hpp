#pragma once

// Executes a RunPlan: solves what the requested tasks need, writes the CSV bundle and returns
// the summary document. Tasks run in dependency order whatever order they were listed in.

#include "vastop/analytic.hpp"
#include "vastop/config.hpp"
#include "vastop/csv.hpp"
#include "vastop/decompose.hpp"
#include "vastop/lattice.hpp"
#include "vastop/mc.hpp"
#include "vastop/pde.hpp"
#include "vastop/region.hpp"
#include "vastop/scenarios.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace vastop {

namespace detail {

/// max |v - h| / h over t < T and x in [F0/4, 4 F0].
inline double max_rel_error_vs_h(const ValueSurface& s, const Scenario& scn) {
    double worst = 0.0;
    for (std::size_t n = 0; n < s.steps(); ++n) {
        for (std::size_t i = 0; i < s.size_x(); ++i) {
            const double x = s.xnodes[i];
            if (x < 0.25 * scn.contract.F0 || x > 4.0 * scn.contract.F0) continue;
            const double h = maturity_benefit_value(scn, s.tnodes[n], x);
            worst = std::max(worst, std::abs(s.values(n, i) - h) / h);
        }
    }
    return worst;
}

inline void write_surface(const std::filesystem::path& file, const ValueSurface& s, const RegionMask& mask) {
    CsvWriter csv(file, {"t", "x", "value", "reward", "in_surrender_region"});
    for (std::size_t n = 0; n <= s.steps(); ++n) {
        for (std::size_t i = 0; i < s.size_x(); ++i) {
            csv.cell(s.tnodes[n]).cell(s.xnodes[i]).cell(s.values(n, i)).cell(s.obstacle(n, i)).cell(mask.at(n, i) ? 1 : 0);
            csv.end_row();
        }
    }
}

inline void write_boundary(const std::filesystem::path& file, const Boundary& bd) {
    CsvWriter csv(file, {"t", "b_t", "empty_flag"});
    for (std::size_t n = 0; n < bd.b.size(); ++n) {
        csv.cell(bd.tnodes[n]).cell(bd.b[n]).cell(bd.empty(n) ? 1 : 0);
        csv.end_row();
    }
}

inline Json times_json(const std::vector<double>& ts) {
    Json a = Json::array();
    for (double t : ts) a.push_back(t);
    return a;
}

/// Compresses a sorted list of grid times into [first, last] runs of consecutive nodes.
inline Json time_runs(const std::vector<double>& ts, double dt) {
    Json runs = Json::array();
    std::size_t k = 0;
    while (k < ts.size()) {
        std::size_t e = k;
        while (e + 1 < ts.size() && std::abs(ts[e + 1] - ts[e] - dt) < 1e-9 * std::max(1.0, dt)) ++e;
        runs.push_back({ts[k], ts[e]});
        k = e + 1;
    }
    return runs;
}

}  // namespace detail

/// Runs the plan, writing artifacts under plan.output_dir. Throws ConfigError for invalid
/// input and SolverError/UnsupportedError/DomainError for failures while solving.
inline Json run_scenario(const RunPlan& plan) {
    namespace fs = std::filesystem;
    const auto started = std::chrono::steady_clock::now();
    const fs::path out = plan.output_dir;
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create '" + out.string() + "': " + ec.message(), "output.dir");

    const Scenario& scn = plan.scenario;
    Json summary;
    summary["config"] = plan_to_json(plan);
    Json results = Json::object();
    Json warnings = Json::array();

    const bool want_regions = plan.has("regions") || plan.has("boundary") || plan.has("decompose") || plan.has("mc-verify");
    const bool want_lattice = plan.has("price-lattice") || want_regions;
    const bool want_pde = plan.has("price-pde");

    if (plan.has("check-L")) {
        Json r;
        const auto tn = uniform_times(scn.contract.T, plan.lattice.N);
        const std::vector<double> tgrid(tn.begin(), tn.end() - 1);
        const std::vector<double> xgrid = log_uniform_nodes(scn.contract.F0, plan.lattice.xmax_mult, plan.lattice.M);
        const auto rep = never_surrender_check(scn, tgrid, xgrid);
        r["never_surrender_holds"] = rep.holds;
        r["violating_nodes"] = rep.violations.size();
        CsvWriter csv(out / "L.csv", {"t", "L", "section"});
        std::vector<SectionClass> cls;
        if (scn.time_only()) cls = classify_sections(scn, tgrid);
        std::vector<double> neg;
        for (std::size_t n = 0; n < tgrid.size(); ++n) {
            const double L = L_value(scn, tgrid[n], scn.contract.F0);
            if (L < -kLZeroTolerance) neg.push_back(tgrid[n]);
            csv.cell(tgrid[n]).cell(L).cell(cls.empty() ? "n/a" : to_string(cls[n]));
            csv.end_row();
        }
        r["negative_L_runs"] = detail::time_runs(neg, scn.contract.T / static_cast<double>(plan.lattice.N));
        results["check-L"] = r;
    }

    std::optional<ValueSurface> lattice_disc, lattice_cont, pde_surface;
    std::optional<RegionMask> mask_disc, mask_cont;
    std::optional<Boundary> boundary;
    std::optional<ChainGrid> chain;

    if (want_lattice) {
        Json r;
        chain = build_chain(scn, plan.lattice.N, plan.lattice.M, plan.lattice.xmax_mult);
        const ChainGrid& grid = *chain;
        lattice_disc = bermudan_value(grid, scn, RewardKind::discontinuous);
        mask_disc = extract_regions(*lattice_disc, scn, plan.region);
        r["N"] = plan.lattice.N;
        r["M"] = plan.lattice.M;
        r["upwinded"] = grid.upwinded;
        r["v0"] = lattice_disc->value_at(0, scn.contract.F0);
        if (scn.time_only()) {
            r["h0"] = maturity_benefit_value(scn, 0.0, scn.contract.F0);
            r["max_rel_v_minus_h"] = detail::max_rel_error_vs_h(*lattice_disc, scn);
        }
        if (plan.has("price-lattice")) {
            detail::write_surface(out / "surface_lattice.csv", *lattice_disc, *mask_disc);
            const auto ext = american_extrapolate(scn, plan.lattice.Nseq, plan.lattice.M, plan.lattice.xmax_mult);
            r["extrapolation"] = {{"steps", ext.steps},
                                  {"values", ext.values},
                                  {"deltas", ext.deltas},
                                  {"extrapolated", ext.extrapolated},
                                  {"convergence_warning", ext.convergence_warning}};
            if (ext.convergence_warning) warnings.push_back("lattice: Bermudan deltas are not decreasing");
        }
        results["price-lattice"] = r;
    }

    if (want_pde) {
        Json r;
        pde_surface = solve_variational_inequality(scn, plan.pde);
        const RegionMask m = extract_regions(*pde_surface, scn, plan.region);
        detail::write_surface(out / "surface_pde.csv", *pde_surface, m);
        r["v0"] = pde_surface->value_at(0, scn.contract.F0);
        r["heuristic"] = pde_surface->heuristic;
        if (pde_surface->heuristic) warnings.push_back("pde: state-dependent fee, variational inequality is heuristic");
        if (scn.time_only()) r["max_rel_v_minus_h"] = detail::max_rel_error_vs_h(*pde_surface, scn);
        r["surrender_nodes"] = m.count();
        if (plan.has("boundary")) {
            const Boundary pb = extract_boundary(m);
            CsvWriter csv(out / "smooth_fit.csv", {"t", "b_t", "left_slope", "right_slope", "jump", "skipped"});
            for (const auto& p : smooth_fit_diagnostic(*pde_surface, pb)) {
                csv.cell(p.t).cell(p.skipped ? std::numeric_limits<double>::infinity() : p.b).cell(p.left_slope);
                csv.cell(p.right_slope).cell(p.jump).cell(p.skipped ? 1 : 0);
                csv.end_row();
            }
        }
        results["price-pde"] = r;
    }

    if (want_regions) {
        Json r;
        lattice_cont = bermudan_value(*chain, scn, RewardKind::continuous);
        mask_cont = extract_regions(*lattice_cont, scn, plan.region);
        r["rule"] = to_string(plan.region.rule);
        r["surrender_nodes"] = mask_disc->count();
        r["surrender_region_empty"] = mask_disc->count() == 0;
        r["surrender_nodes_continuous"] = mask_cont->count();
        const auto cmp = compare_regions(*mask_disc, *mask_cont);
        r["regions_equal"] = cmp.equal;
        r["sym_diff_nodes"] = cmp.sym_diff_nodes.size();
        double diff = 0.0;
        for (std::size_t n = 0; n <= lattice_disc->steps(); ++n)
            for (std::size_t i = 0; i < lattice_disc->size_x(); ++i)
                diff = std::max(diff, std::abs(lattice_disc->values(n, i) - lattice_cont->values(n, i)));
        r["max_abs_surface_difference"] = diff;
        const double dt = scn.contract.T / static_cast<double>(plan.lattice.N);
        if (scn.time_only()) {
            const std::vector<double> tgrid(mask_disc->tnodes.begin(), mask_disc->tnodes.end() - 1);
            const auto cls = classify_sections(scn, tgrid);
            const auto chk = check_sections(*mask_disc, cls);
            r["empty_sections"] = detail::time_runs(chk.empty_times, dt);
            r["predicted_empty_violations"] = detail::times_json(chk.failures);
            r["conjecture_warnings"] = detail::times_json(chk.warnings);
            for (double t : chk.warnings)
                warnings.push_back("regions: L(t) < 0 but section empty at t = " + format_number(t));
        }
        if (plan.has("regions")) {
            detail::write_surface(out / "region_discontinuous.csv", *lattice_disc, *mask_disc);
            detail::write_surface(out / "region_continuous.csv", *lattice_cont, *mask_cont);
        }
        results["regions"] = r;

        boundary = extract_boundary(*mask_disc);
        if (plan.has("boundary")) {
            Json b;
            detail::write_boundary(out / "boundary.csv", *boundary);
            b["structural_violations"] = boundary->violations.size();
            std::size_t below_floor = 0;
            const auto& xs = lattice_disc->xnodes;
            for (std::size_t n = 0; n < boundary->b.size(); ++n) {
                if (boundary->empty(n)) continue;
                const std::size_t k = boundary->index[n];
                const double dx = k + 1 < xs.size() ? xs[k + 1] - xs[k] : xs[k] - xs[k - 1];
                const double floor = scn.contract.G * std::exp(-scn.market.r * (scn.contract.T - boundary->tnodes[n]));
                if (boundary->b[n] < floor - dx) ++below_floor;
            }
            b["below_guarantee_floor"] = below_floor;
            const std::size_t last = boundary->b.size() - 1;
            b["empty_at_last_date"] = boundary->empty(last);
            results["boundary"] = b;
        }
    }

    if (plan.has("decompose")) {
        if (!scn.time_only()) {
            warnings.push_back("decompose: skipped, premium quadrature needs a time-only fee and charge");
        } else {
            const auto rep = decomposition_residuals(*lattice_disc, scn, *boundary, plan.decompose);
            CsvWriter csv(out / "decomposition.csv", {"t", "x", "v", "h", "e", "f", "res_he", "res_phif"});
            for (const auto& row : rep.rows) {
                csv.cell(row.t).cell(row.x).cell(row.v).cell(row.h).cell(row.e).cell(row.f).cell(row.res_he).cell(row.res_phif);
                csv.end_row();
            }
            results["decompose"] = {{"mean_abs_res_he", rep.mean_abs_he},   {"mean_abs_res_phif", rep.mean_abs_phif},
                                    {"max_abs_res_he", rep.max_abs_he},     {"max_abs_res_phif", rep.max_abs_phif},
                                    {"identity_error", rep.max_identity_error}, {"min_e", rep.min_e},
                                    {"min_f", rep.min_f},                   {"flagged_rows", rep.flagged},
                                    {"rows", rep.rows.size()}};
        }
    }

    if (plan.has("mc-verify")) {
        Json r;
        const PathBatch batch = simulate_paths(scn, plan.mc.seed, plan.mc.npaths, plan.lattice.N, plan.mc.scheme);
        const McEstimate hb = mc_maturity_benefit(batch);
        const McEstimate sv = mc_boundary_strategy_value(batch, *boundary);
        CsvWriter csv(out / "estimates.csv", {"quantity", "estimate", "std_error", "npaths", "seed"});
        auto row = [&](const char* name, const McEstimate& e) {
            csv.cell(name).cell(e.estimate).cell(e.std_error).cell(e.npaths).cell(static_cast<std::size_t>(e.seed));
            csv.end_row();
        };
        row("maturity_benefit", hb);
        row("boundary_strategy", sv);
        const double v0 = lattice_disc->value_at(0, scn.contract.F0);
        r["maturity_benefit"] = {{"estimate", hb.estimate}, {"std_error", hb.std_error}};
        r["boundary_strategy"] = {{"estimate", sv.estimate}, {"std_error", sv.std_error}};
        r["solver_v0"] = v0;
        if (scn.time_only()) {
            const double h0 = maturity_benefit_value(scn, 0.0, scn.contract.F0);
            r["analytic_h0"] = h0;
            r["maturity_benefit_within_3se"] = std::abs(hb.estimate - h0) <= 3.0 * hb.std_error;
            r["sandwich_holds"] = sv.estimate >= h0 - 3.0 * sv.std_error && sv.estimate <= v0 + 3.0 * sv.std_error;
            const PathBatch small = simulate_paths(scn, plan.mc.seed, plan.mc.premium_npaths, plan.lattice.N, plan.mc.scheme);
            const McPremiums prem = mc_premium_integrals(small, *mask_disc);
            row("premium_e", prem.e);
            row("premium_f", prem.f);
            const PremiumParts q = premium_parts(scn, *boundary, 0.0, scn.contract.F0);
            r["premium_e"] = {{"estimate", prem.e.estimate}, {"std_error", prem.e.std_error}, {"quadrature", q.e}};
            r["premium_f"] = {{"estimate", prem.f.estimate}, {"std_error", prem.f.std_error}, {"quadrature", q.f}};
        }
        results["mc-verify"] = r;
    }

    if (plan.has("paper-fig")) {
        Json r = Json::array();
        CsvWriter regions(out / "paper_fig_regions.csv", {"fee", "reward", "t", "x", "in_surrender_region"});
        CsvWriter bounds(out / "paper_fig_boundary.csv", {"fee", "reward", "t", "b_t", "empty_flag"});
        for (const auto& [name, panel_scn] : {std::pair{"c1", scenarios::fee_c1()}, std::pair{"c2", scenarios::fee_c2()}}) {
            const ChainGrid grid = build_chain(panel_scn, plan.lattice.N, plan.lattice.M, plan.lattice.xmax_mult);
            for (RewardKind kind : {RewardKind::discontinuous, RewardKind::continuous}) {
                const ValueSurface s = bermudan_value(grid, panel_scn, kind);
                const RegionMask m = extract_regions(s, panel_scn, plan.region);
                const Boundary bd = extract_boundary(m);
                for (std::size_t n = 0; n < s.steps(); ++n) {
                    for (std::size_t i = 0; i < s.size_x(); ++i) {
                        regions.cell(name).cell(to_string(kind)).cell(s.tnodes[n]).cell(s.xnodes[i]).cell(m.at(n, i) ? 1 : 0);
                        regions.end_row();
                    }
                    bounds.cell(name).cell(to_string(kind)).cell(bd.tnodes[n]).cell(bd.b[n]).cell(bd.empty(n) ? 1 : 0);
                    bounds.end_row();
                }
                std::vector<double> empty;
                for (std::size_t n = 0; n < bd.b.size(); ++n)
                    if (bd.empty(n)) empty.push_back(bd.tnodes[n]);
                r.push_back({{"fee", name},
                             {"reward", to_string(kind)},
                             {"surrender_nodes", m.count()},
                             {"empty_sections", detail::time_runs(empty, grid.dt)}});
            }
        }
        results["paper-fig"] = r;
    }

    summary["results"] = results;
    summary["warnings"] = warnings;
    summary["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ofstream(out / "summary.json") << summary.dump(2) << '\n';
    return summary;
}

}  // namespace vastop
