// Command-line front end. Subcommands map 1:1 onto the runner functions in
// dimer/cli.hpp; this file only parses argv and translates failures into the
// documented exit codes (2 = config problem, 3 = engine error).

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dimer/cli.hpp"

namespace {

struct Args {
    std::string mode;
    std::string config_path;
    std::string out_dir = ".";
    bool plot = false;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets; // key=value overrides
};

void add_common(CLI::App* sub, Args& args) {
    sub->add_option("--config", args.config_path, "experiment config file (key = value lines)");
    sub->add_option("--out", args.out_dir, "output directory (default: current)");
    sub->add_flag("--plot", args.plot, "also write plot.svg");
    sub->add_option("--seed", args.seed, "override the RNG seed");
    sub->add_option("--set", args.sets, "override a config key, e.g. --set n_sites=64")
        ->take_all();
    sub->callback([sub, &args] { args.mode = sub->get_name(); });
}

dimer::Config load_config(const Args& args) {
    dimer::Config cfg = args.config_path.empty()
                            ? dimer::Config{}
                            : dimer::Config::parse_file(args.config_path);
    for (const std::string& kv : args.sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw dimer::ConfigError(0, "--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"steady states of alternating-mass harmonic chains with heat baths"};
    app.require_subcommand(1);

    Args args;
    add_common(app.add_subcommand("solve", "finite chain, exact covariance solve"), args);
    add_common(app.add_subcommand("greens", "finite chain via frequency integrals"), args);
    add_common(app.add_subcommand("asymptotic", "infinite-chain sublattice formulas"), args);
    add_common(app.add_subcommand("simulate", "Langevin simulation, optional bulk noise"), args);
    add_common(app.add_subcommand("strip", "quasi-2D strip (N layers x W ring)"), args);
    add_common(app.add_subcommand("sweep", "asymptotic formulas over a parameter range"), args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }

    try {
        dimer::cli::RunOptions opts;
        opts.out_dir = args.out_dir;
        opts.plot = args.plot;
        opts.seed = args.seed;
        dimer::cli::run_mode(args.mode, load_config(args), opts);
    } catch (const dimer::ConfigError& e) {
        if (e.line() > 0)
            std::fprintf(stderr, "config error (line %d): %s\n", e.line(), e.what());
        else
            std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const dimer::Error& e) {
        if (e.code() == "ConfigError") {
            std::fprintf(stderr, "config error: %s\n", e.what());
            return 2;
        }
        std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
        return 3;
    }
    return 0;
}
