#pragma once

// JSON scenario and run-plan parsing. Every object is checked against its allowed keys and
// every error names the offending field path. Defaults are materialised into the returned
// structures so that the resolved configuration can be echoed back.

#include "vastop/decompose.hpp"
#include "vastop/errors.hpp"
#include "vastop/mc.hpp"
#include "vastop/model.hpp"
#include "vastop/pde.hpp"
#include "vastop/region.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace vastop {

using Json = nlohmann::json;

namespace detail {

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline void require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("must be an object", path.empty() ? "<root>" : path);
}

inline void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    require_object(j, path);
    for (const auto& item : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return item.key() == a; }) ==
            allowed.end())
            throw ConfigError("unknown key", join_path(path, item.key()));
    }
}

inline double get_number(const Json& j, const std::string& path, const char* key) {
    const std::string field = join_path(path, key);
    if (!j.contains(key)) throw ConfigError("missing required field", field);
    if (!j.at(key).is_number()) throw ConfigError("must be a number", field);
    return j.at(key).get<double>();
}

inline double get_number_or(const Json& j, const std::string& path, const char* key, double fallback) {
    return j.contains(key) ? get_number(j, path, key) : fallback;
}

inline std::size_t get_count_or(const Json& j, const std::string& path, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const std::string field = join_path(path, key);
    if (!j.at(key).is_number_integer() || j.at(key).get<long long>() < 0)
        throw ConfigError("must be a non-negative integer", field);
    return j.at(key).get<std::size_t>();
}

inline std::string get_string(const Json& j, const std::string& path, const char* key) {
    const std::string field = join_path(path, key);
    if (!j.contains(key)) throw ConfigError("missing required field", field);
    if (!j.at(key).is_string()) throw ConfigError("must be a string", field);
    return j.at(key).get<std::string>();
}

inline std::vector<double> get_numbers(const Json& j, const std::string& path, const char* key) {
    const std::string field = join_path(path, key);
    if (!j.contains(key)) throw ConfigError("missing required field", field);
    if (!j.at(key).is_array()) throw ConfigError("must be an array of numbers", field);
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw ConfigError("must be an array of numbers", field);
        out.push_back(v.get<double>());
    }
    return out;
}

inline FeeSpec parse_fee(const Json& j, const std::string& path, double T) {
    require_object(j, path);
    const std::string kind = get_string(j, path, "kind");
    if (kind == "constant") {
        reject_unknown(j, path, {"kind", "rate"});
        return FeeSpec::constant(get_number(j, path, "rate"));
    }
    if (kind == "piecewise") {
        reject_unknown(j, path, {"kind", "breakpoints", "rates"});
        return FeeSpec::piecewise(get_numbers(j, path, "breakpoints"), get_numbers(j, path, "rates"));
    }
    if (kind == "polynomial") {
        reject_unknown(j, path, {"kind", "coefficients"});
        return FeeSpec::polynomial(get_numbers(j, path, "coefficients"));
    }
    if (kind == "charge-bound") {
        reject_unknown(j, path, {"kind", "k"});
        return FeeSpec::charge_bound(get_number(j, path, "k"), T);
    }
    if (kind == "logistic") {
        reject_unknown(j, path, {"kind", "low", "high", "center", "width"});
        return FeeSpec::logistic(get_number(j, path, "low"), get_number(j, path, "high"), get_number(j, path, "center"),
                                 get_number(j, path, "width"));
    }
    throw ConfigError("unknown fee kind '" + kind + "' (constant, piecewise, polynomial, charge-bound, logistic)",
                      join_path(path, "kind"));
}

inline Json fee_to_json(const FeeSpec& fee) {
    return std::visit(
        [](const auto& f) -> Json {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, fee::Constant>) {
                return {{"kind", "constant"}, {"rate", f.rate}};
            } else if constexpr (std::is_same_v<F, fee::Piecewise>) {
                return {{"kind", "piecewise"}, {"breakpoints", f.breakpoints}, {"rates", f.rates}};
            } else if constexpr (std::is_same_v<F, fee::Polynomial>) {
                return {{"kind", "polynomial"}, {"coefficients", f.coefficients}};
            } else if constexpr (std::is_same_v<F, fee::ChargeBound>) {
                return {{"kind", "charge-bound"}, {"k", f.k}};
            } else if constexpr (std::is_same_v<F, fee::Logistic>) {
                return {{"kind", "logistic"}, {"low", f.low}, {"high", f.high}, {"center", f.center}, {"width", f.width}};
            } else {
                return {{"kind", "general-state"}};
            }
        },
        fee.form());
}

inline ChargeSpec parse_charge(const Json& j, const std::string& path, double T) {
    require_object(j, path);
    const std::string kind = get_string(j, path, "kind");
    if (kind == "exponential") {
        reject_unknown(j, path, {"kind", "kappa"});
        return ChargeSpec::exponential(get_number(j, path, "kappa"), T);
    }
    if (kind == "cubic") {
        reject_unknown(j, path, {"kind", "k"});
        return ChargeSpec::cubic(get_number(j, path, "k"), T);
    }
    if (kind == "unit") {
        reject_unknown(j, path, {"kind"});
        return ChargeSpec::unit(T);
    }
    throw ConfigError("unknown charge kind '" + kind + "' (exponential, cubic, unit)", join_path(path, "kind"));
}

inline Json charge_to_json(const ChargeSpec& charge) {
    return std::visit(
        [](const auto& c) -> Json {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, charge::Exponential>) {
                return {{"kind", "exponential"}, {"kappa", c.kappa}};
            } else if constexpr (std::is_same_v<C, charge::Cubic>) {
                return {{"kind", "cubic"}, {"k", c.k}};
            } else if constexpr (std::is_same_v<C, charge::GeneralTime>) {
                return {{"kind", "general-time"}};
            } else {
                return {{"kind", "general-state"}};
            }
        },
        charge.form());
}

}  // namespace detail

/// Parses a scenario document {market, contract, fee, charge}; `path` prefixes field names.
inline Scenario parse_scenario(const Json& j, const std::string& path = {}) {
    detail::reject_unknown(j, path, {"market", "contract", "fee", "charge"});
    for (const char* key : {"market", "contract", "fee", "charge"})
        if (!j.contains(key)) throw ConfigError("missing required section", detail::join_path(path, key));
    Scenario scn;
    const std::string mp = detail::join_path(path, "market");
    detail::reject_unknown(j.at("market"), mp, {"r", "sigma"});
    scn.market.r = detail::get_number(j.at("market"), mp, "r");
    scn.market.sigma = detail::get_number(j.at("market"), mp, "sigma");
    const std::string cp = detail::join_path(path, "contract");
    detail::reject_unknown(j.at("contract"), cp, {"G", "T", "F0"});
    scn.contract.G = detail::get_number(j.at("contract"), cp, "G");
    scn.contract.T = detail::get_number(j.at("contract"), cp, "T");
    scn.contract.F0 = detail::get_number(j.at("contract"), cp, "F0");
    scn.fee = detail::parse_fee(j.at("fee"), detail::join_path(path, "fee"), scn.contract.T);
    scn.charge = detail::parse_charge(j.at("charge"), detail::join_path(path, "charge"), scn.contract.T);
    try {
        scn.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(e.what(), detail::join_path(path, e.field()));
    }
    return scn;
}

inline Json scenario_to_json(const Scenario& scn) {
    return {{"market", {{"r", scn.market.r}, {"sigma", scn.market.sigma}}},
            {"contract", {{"G", scn.contract.G}, {"T", scn.contract.T}, {"F0", scn.contract.F0}}},
            {"fee", detail::fee_to_json(scn.fee)},
            {"charge", detail::charge_to_json(scn.charge)}};
}

inline Json read_json_file(const std::filesystem::path& file, const std::string& field) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file.string() + "'", field);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + file.string() + "': " + e.what(), field);
    }
}

inline const std::vector<std::string>& known_tasks() {
    static const std::vector<std::string> tasks{"check-L", "price-lattice", "price-pde", "regions",
                                                "boundary", "decompose", "mc-verify", "paper-fig"};
    return tasks;
}

struct LatticeSettings {
    std::size_t N = 360;
    std::size_t M = 401;
    double xmax_mult = 20.0;
    std::vector<std::size_t> Nseq{180, 360, 720};
};

struct McSettings {
    std::uint64_t seed = 20240601;
    std::size_t npaths = 1000000;
    std::size_t premium_npaths = 100000;
    PathScheme scheme = PathScheme::exact_lognormal;
};

/// A resolved run: scenario, tasks and all solver settings with defaults filled in.
struct RunPlan {
    Scenario scenario;
    std::vector<std::string> tasks;
    LatticeSettings lattice;
    PdeGrid pde;
    RegionOptions region;
    DecompositionOptions decompose;
    McSettings mc;
    std::string output_dir = "vastop-out";

    bool has(const std::string& task) const { return std::find(tasks.begin(), tasks.end(), task) != tasks.end(); }

    void validate() const {
        if (tasks.empty()) throw ConfigError("at least one task is required", "tasks");
        if (lattice.N < 1) throw ConfigError("must be >= 1", "grid.N");
        if (lattice.M < 5) throw ConfigError("must be >= 5", "grid.M");
        if (!(lattice.xmax_mult > 1.0)) throw ConfigError("must be > 1", "grid.xmax_mult");
        if (lattice.Nseq.size() < 3) throw ConfigError("needs at least three entries", "grid.Nseq");
        for (std::size_t k = 1; k < lattice.Nseq.size(); ++k)
            if (lattice.Nseq[k] <= lattice.Nseq[k - 1]) throw ConfigError("must be increasing", "grid.Nseq");
        pde.validate();
        if (!(region.tol_rel >= 0.0)) throw ConfigError("must be >= 0", "region.tol_rel");
        if (decompose.t_stride < 1) throw ConfigError("must be >= 1", "decompose.t_stride");
        if (decompose.x_stride < 1) throw ConfigError("must be >= 1", "decompose.x_stride");
        if (!(decompose.x_lo_mult > 0.0 && decompose.x_hi_mult > decompose.x_lo_mult))
            throw ConfigError("need 0 < x_lo_mult < x_hi_mult", "decompose");
        if (mc.npaths < 2) throw ConfigError("must be >= 2", "mc.npaths");
        if (mc.premium_npaths < 2) throw ConfigError("must be >= 2", "mc.premium_npaths");
    }
};

/// Parses a run configuration. A string-valued "scenario" is a file path relative to `base_dir`.
inline RunPlan parse_run_plan(const Json& j, const std::filesystem::path& base_dir = {}) {
    using detail::get_count_or;
    using detail::get_number_or;
    detail::reject_unknown(j, "", {"scenario", "tasks", "grid", "pde", "region", "decompose", "mc", "output"});
    RunPlan plan;
    if (!j.contains("scenario")) throw ConfigError("missing required section", "scenario");
    if (j.at("scenario").is_string()) {
        const auto file = base_dir / j.at("scenario").get<std::string>();
        plan.scenario = parse_scenario(read_json_file(file, "scenario"), "scenario");
    } else {
        plan.scenario = parse_scenario(j.at("scenario"), "scenario");
    }

    if (!j.contains("tasks") || !j.at("tasks").is_array()) throw ConfigError("must be an array of task names", "tasks");
    for (const auto& t : j.at("tasks")) {
        if (!t.is_string()) throw ConfigError("must be an array of task names", "tasks");
        const auto name = t.get<std::string>();
        if (std::find(known_tasks().begin(), known_tasks().end(), name) == known_tasks().end())
            throw ConfigError("unknown task '" + name + "'", "tasks");
        if (!plan.has(name)) plan.tasks.push_back(name);
    }

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        detail::reject_unknown(g, "grid", {"N", "M", "xmax_mult", "Nseq"});
        plan.lattice.N = get_count_or(g, "grid", "N", plan.lattice.N);
        plan.lattice.M = get_count_or(g, "grid", "M", plan.lattice.M);
        plan.lattice.xmax_mult = get_number_or(g, "grid", "xmax_mult", plan.lattice.xmax_mult);
        if (g.contains("Nseq")) {
            plan.lattice.Nseq.clear();
            for (double v : detail::get_numbers(g, "grid", "Nseq")) {
                if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError("must hold positive integers", "grid.Nseq");
                plan.lattice.Nseq.push_back(static_cast<std::size_t>(v));
            }
        }
    }
    if (j.contains("pde")) {
        const auto& p = j.at("pde");
        detail::reject_unknown(p, "pde", {"N", "M", "xmax_mult", "theta", "rannacher_steps", "omega", "tol", "max_iter"});
        plan.pde.N = get_count_or(p, "pde", "N", plan.pde.N);
        plan.pde.M = get_count_or(p, "pde", "M", plan.pde.M);
        plan.pde.xmax_mult = get_number_or(p, "pde", "xmax_mult", plan.pde.xmax_mult);
        plan.pde.theta = get_number_or(p, "pde", "theta", plan.pde.theta);
        plan.pde.rannacher_steps = get_count_or(p, "pde", "rannacher_steps", plan.pde.rannacher_steps);
        plan.pde.psor.omega = get_number_or(p, "pde", "omega", plan.pde.psor.omega);
        plan.pde.psor.tol = get_number_or(p, "pde", "tol", plan.pde.psor.tol);
        plan.pde.psor.max_iter = get_count_or(p, "pde", "max_iter", plan.pde.psor.max_iter);
    }
    if (plan.pde.psor.tol == 0.0) plan.pde.psor.tol = 1e-10 * std::max(plan.scenario.contract.G, 1.0);
    if (j.contains("region")) {
        const auto& r = j.at("region");
        detail::reject_unknown(r, "region", {"tol_abs", "tol_rel", "rule"});
        plan.region.tol_abs = get_number_or(r, "region", "tol_abs", plan.region.tol_abs);
        plan.region.tol_rel = get_number_or(r, "region", "tol_rel", plan.region.tol_rel);
        if (r.contains("rule")) {
            const auto rule = detail::get_string(r, "region", "rule");
            if (rule == "dominance")
                plan.region.rule = RegionRule::dominance;
            else if (rule == "gap")
                plan.region.rule = RegionRule::gap;
            else
                throw ConfigError("must be 'dominance' or 'gap'", "region.rule");
        }
    }
    if (plan.region.tol_abs < 0.0) plan.region.tol_abs = 1e-8 * plan.scenario.contract.G;
    if (j.contains("decompose")) {
        const auto& d = j.at("decompose");
        detail::reject_unknown(d, "decompose", {"t_stride", "x_stride", "x_lo_mult", "x_hi_mult", "tolerance"});
        plan.decompose.t_stride = get_count_or(d, "decompose", "t_stride", plan.decompose.t_stride);
        plan.decompose.x_stride = get_count_or(d, "decompose", "x_stride", plan.decompose.x_stride);
        plan.decompose.x_lo_mult = get_number_or(d, "decompose", "x_lo_mult", plan.decompose.x_lo_mult);
        plan.decompose.x_hi_mult = get_number_or(d, "decompose", "x_hi_mult", plan.decompose.x_hi_mult);
        plan.decompose.tolerance = get_number_or(d, "decompose", "tolerance", plan.decompose.tolerance);
    }
    if (plan.decompose.tolerance < 0.0) plan.decompose.tolerance = 5e-3 * plan.scenario.contract.G;
    if (j.contains("mc")) {
        const auto& m = j.at("mc");
        detail::reject_unknown(m, "mc", {"seed", "npaths", "premium_npaths", "scheme"});
        plan.mc.seed = get_count_or(m, "mc", "seed", plan.mc.seed);
        plan.mc.npaths = get_count_or(m, "mc", "npaths", plan.mc.npaths);
        plan.mc.premium_npaths = get_count_or(m, "mc", "premium_npaths", plan.mc.premium_npaths);
        if (m.contains("scheme")) {
            const auto scheme = detail::get_string(m, "mc", "scheme");
            if (scheme == "exact-lognormal")
                plan.mc.scheme = PathScheme::exact_lognormal;
            else if (scheme == "euler")
                plan.mc.scheme = PathScheme::euler;
            else
                throw ConfigError("must be 'exact-lognormal' or 'euler'", "mc.scheme");
        }
    }
    if (j.contains("output")) {
        const auto& o = j.at("output");
        detail::reject_unknown(o, "output", {"dir"});
        if (o.contains("dir")) plan.output_dir = detail::get_string(o, "output", "dir");
    }
    plan.validate();
    return plan;
}

/// The plan with every default materialised, in the input schema.
inline Json plan_to_json(const RunPlan& plan) {
    Json nseq = Json::array();
    for (auto n : plan.lattice.Nseq) nseq.push_back(n);
    return {{"scenario", scenario_to_json(plan.scenario)},
            {"tasks", plan.tasks},
            {"grid", {{"N", plan.lattice.N}, {"M", plan.lattice.M}, {"xmax_mult", plan.lattice.xmax_mult}, {"Nseq", nseq}}},
            {"pde",
             {{"N", plan.pde.N},
              {"M", plan.pde.M},
              {"xmax_mult", plan.pde.xmax_mult},
              {"theta", plan.pde.theta},
              {"rannacher_steps", plan.pde.rannacher_steps},
              {"omega", plan.pde.psor.omega},
              {"tol", plan.pde.psor.tol},
              {"max_iter", plan.pde.psor.max_iter}}},
            {"region", {{"tol_abs", plan.region.tol_abs}, {"tol_rel", plan.region.tol_rel}, {"rule", to_string(plan.region.rule)}}},
            {"decompose",
             {{"t_stride", plan.decompose.t_stride},
              {"x_stride", plan.decompose.x_stride},
              {"x_lo_mult", plan.decompose.x_lo_mult},
              {"x_hi_mult", plan.decompose.x_hi_mult},
              {"tolerance", plan.decompose.tolerance}}},
            {"mc",
             {{"seed", plan.mc.seed},
              {"npaths", plan.mc.npaths},
              {"premium_npaths", plan.mc.premium_npaths},
              {"scheme", to_string(plan.mc.scheme)}}},
            {"output", {{"dir", plan.output_dir}}}};
}

}  // namespace vastop
