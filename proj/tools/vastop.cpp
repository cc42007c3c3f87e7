// vastop: command-line front end. `vastop run <config> [--out DIR] [--seed N] [--grid-N n --grid-M m]`
// Exit codes: 0 success, 1 solver failure, 2 configuration error.

#include "vastop/run.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitSolver = 1;
constexpr int kExitConfig = 2;

int run_command(const std::string& config, const std::optional<std::string>& out, const std::optional<std::uint64_t>& seed,
                const std::optional<std::size_t>& grid_n, const std::optional<std::size_t>& grid_m) {
    using namespace vastop;
    try {
        const std::filesystem::path file(config);
        Json j = read_json_file(file, "config");
        if (!j.is_object()) throw ConfigError("top level must be an object", "config");
        // Command-line overrides are folded into the document so the resolved plan echoes them.
        if (out) j["output"]["dir"] = *out;
        if (seed) j["mc"]["seed"] = *seed;
        if (grid_n) {
            j["grid"]["N"] = *grid_n;
            j["pde"]["N"] = *grid_n;
        }
        if (grid_m) {
            j["grid"]["M"] = *grid_m;
            j["pde"]["M"] = *grid_m;
        }
        const RunPlan plan = parse_run_plan(j, file.parent_path());
        const Json summary = run_scenario(plan);
        std::cout << "wrote " << (std::filesystem::path(plan.output_dir) / "summary.json").string() << '\n';
        for (const auto& w : summary.at("warnings")) std::cerr << "warning: " << w.get<std::string>() << '\n';
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error";
        if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
        std::cerr << ": " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << " (residual " << e.residual() << ")\n";
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal surrender of variable annuities with a guaranteed minimum maturity benefit"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the tasks of a configuration file and write the artifact bundle");
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid_n, grid_m;
    run->add_option("config", config, "Run configuration (JSON)")->required();
    run->add_option("--out", out, "Output directory (overrides output.dir)");
    run->add_option("--seed", seed, "Monte Carlo seed (overrides mc.seed)");
    run->add_option("--grid-N", grid_n, "Time steps for lattice and PDE")->check(CLI::PositiveNumber);
    run->add_option("--grid-M", grid_m, "State nodes for lattice and PDE")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }
    return run_command(config, out, seed, grid_n, grid_m);
}
