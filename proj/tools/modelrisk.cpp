#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "../src/cli/commands.hpp"
#include "../src/cli/config.hpp"

using mrh::cli::CommandArgs;
using mrh::cli::ConfigError;

int main(int argc, char** argv) {
    CLI::App app{"first-order model-risk sensitivities on two-period models"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int threads = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration JSON file")->required();
        sub->add_option("--out", out_dir, "output directory (created if missing)");
        sub->add_option("--seed", seed_override, "override the configured master seed")
            ->each([&](const std::string&) { seed_given = true; });
        sub->add_option("--threads", threads, "worker threads for sweeps (0 = auto)");
        return sub;
    };

    CLI::App* sensitivity =
        add_common(app.add_subcommand("sensitivity", "sensitivities per constraint set (CSV)"));
    CLI::App* relative = add_common(
        app.add_subcommand("relative", "sensitivities divided by the criterion value (CSV)"));
    CLI::App* hedge =
        add_common(app.add_subcommand("hedge", "optimal hedge coefficients (CSV + SVG)"));
    CLI::App* worstcase = add_common(app.add_subcommand(
        "worst-case", "worst-case deviation scenarios and first-order gains (CSV + SVG + JSON)"));
    CLI::App* sweep = add_common(
        app.add_subcommand("sweep", "sigma sweep with absolute and relative curves (CSV + SVG)"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // usage problems are configuration errors
    }

    CommandArgs args;
    args.out_dir = out_dir;
    args.threads = threads;
    try {
        args.config = mrh::cli::load_config_file(config_path);
        if (seed_given) args.config.seed = seed_override;
        if (threads < 0) throw ConfigError("--threads: must be >= 0");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    if (sensitivity->parsed()) return mrh::cli::cmd_sensitivity(args);
    if (relative->parsed()) return mrh::cli::cmd_relative(args);
    if (hedge->parsed()) return mrh::cli::cmd_hedge(args);
    if (worstcase->parsed()) return mrh::cli::cmd_worstcase(args);
    if (sweep->parsed()) return mrh::cli::cmd_sweep(args);
    return 2;
}
