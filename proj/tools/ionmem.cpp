// ionmem: trapped-ion hyperfine qubit memory simulator front end.
//
// Subcommands run a scenario config end to end and emit CSV data, fit
// reports and a manifest into the output directory. Exit codes: 0 success,
// 1 runtime failure, 2 config error.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "ionmem/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "scenario config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory (default: config [output] dir)");
    cmd->add_option("--seed", args.seed, "override the scenario master seed")
        ->each([&args](const std::string&) { args.seed_set = true; });
}

int run(ionmem::harness::ScenarioKind kind, const CommonArgs& args) {
    using namespace ionmem;
    harness::Scenario scenario = harness::load_scenario_file(args.config_path);
    if (scenario.kind != kind)
        throw ConfigError(args.config_path + ": scenario kind '" +
                          harness::kind_name(scenario.kind) + "' does not match the '" +
                          std::string(harness::kind_name(kind)) + "' subcommand");
    if (args.seed_set) scenario.master_seed = args.seed;
    const std::string out_dir = args.out_dir.empty() ? scenario.output_dir : args.out_dir;
    harness::run_scenario(scenario, out_dir);
    std::printf("%s: wrote outputs to %s\n", scenario.name.c_str(), out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"trapped-ion hyperfine qubit memory simulator"};
    app.require_subcommand(1);

    CommonArgs clock_args, ramsey_args, dfs_args, parabola_args;
    auto* clock_cmd =
        app.add_subcommand("clock-scan", "enumerate field-independent transition points");
    add_common(clock_cmd, clock_args);
    auto* ramsey_cmd =
        app.add_subcommand("ramsey", "Ramsey phase scans, fringe fits and contrast decay");
    add_common(ramsey_cmd, ramsey_args);
    auto* dfs_cmd = app.add_subcommand("dfs", "two-ion DFS parity oscillation and lifetime");
    add_common(dfs_cmd, dfs_args);
    auto* parabola_cmd =
        app.add_subcommand("parabola", "transition frequency vs field around the clock point");
    add_common(parabola_cmd, parabola_args);

    try {
        app.parse(argc, argv);
        using ionmem::harness::ScenarioKind;
        if (clock_cmd->parsed()) return run(ScenarioKind::clock_scan, clock_args);
        if (ramsey_cmd->parsed()) return run(ScenarioKind::ramsey, ramsey_args);
        if (dfs_cmd->parsed()) return run(ScenarioKind::dfs, dfs_args);
        if (parabola_cmd->parsed()) return run(ScenarioKind::parabola, parabola_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ionmem::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
