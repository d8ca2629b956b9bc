#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "fpg/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Forward-performance investment-consumption games: solve, verify, simulate."};
    std::string scenario, out = "out", emit = "both";
    std::uint64_t seed = 0;
    int threads = 0;
    std::size_t paths = 0;
    double dt = 0.0;
    app.add_option("--scenario", scenario, "Scenario JSON file")->required();
    app.add_option("--out", out, "Output directory");
    auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");
    app.add_option("--threads", threads, "OpenMP threads (results do not depend on it)")->check(CLI::NonNegativeNumber);
    auto* paths_opt = app.add_option("--paths", paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    auto* dt_opt = app.add_option("--dt", dt, "Simulation time step")->check(CLI::PositiveNumber);
    app.add_option("--emit", emit, "Artifacts to write")->check(CLI::IsMember({"csv", "json", "both"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    fpg::cli::RunOptions opt;
    opt.out = out;
    opt.threads = threads;
    if (*seed_opt) opt.seed = seed;
    if (*paths_opt) opt.paths = paths;
    if (*dt_opt) opt.dt = dt;
    static const std::map<std::string, fpg::cli::Emit> emits{
        {"csv", fpg::cli::Emit::csv}, {"json", fpg::cli::Emit::json}, {"both", fpg::cli::Emit::both}};
    opt.emit = emits.at(emit);
    return fpg::cli::run(scenario, opt, std::cerr);
}
