// Command-line front end: gcontract <command> [--config f] [--out dir] [--seed s] [--threads k]
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gcontract/cli/commands.hpp"

int main(int argc, char** argv)
{
    using namespace gcontract::cli;

    CLI::App app{"Optimal contracts for heterogeneous principal-agent problems with graphon interactions"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    Options opts;
    auto* config_opt = app.add_option("--config", config_path, "JSON run configuration");
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.directory)");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides sim.seed)");
    app.add_option("--threads", opts.threads, "worker threads; never changes results")->check(CLI::PositiveNumber);
    app.add_option("--dump-paths", opts.dump_paths, "simulate: also write up to 1000 tagged output paths");
    for (const auto& [name, cmd] : commands()) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    RunConfig cfg;
    try {
        json user = config_opt->count() ? read_config_file(config_path) : json(nullptr);
        cfg = load_config(user);
        if (out_opt->count()) cfg = with_override(cfg, "output.directory", out_dir);
        if (seed_opt->count()) cfg = with_override(cfg, "sim.seed", seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    return run_command(command, cfg, opts, std::cerr);
}
