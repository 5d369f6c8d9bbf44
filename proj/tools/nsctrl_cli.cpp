// Command-line driver: `nsctrl run` executes an experiment described by a
// key = value config file, `nsctrl validate` checks one without running.
// Exit codes: 0 ok, 1 configuration problem, 2 runtime solver failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nsctrl/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"penalized control experiments for the incompressible "
                 "Stokes/Navier-Stokes system"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_override;
    std::uint64_t seed_override = 0;
    int parallel = 1;

    CLI::App* run = app.add_subcommand("run", "run an experiment");
    run->add_option("--config", config_path, "config file (key = value)")
        ->required();
    CLI::Option* out_opt =
        run->add_option("--output", output_override, "output directory");
    CLI::Option* seed_opt =
        run->add_option("--seed", seed_override, "seed override");
    run->add_option("--parallel", parallel,
                    "max concurrently processed sweep points")
        ->check(CLI::PositiveNumber);

    CLI::App* validate =
        app.add_subcommand("validate", "check a config without running");
    validate->add_option("--config", config_path, "config file (key = value)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const nsctrl::ExperimentConfig cfg = nsctrl::parse_config(config_path);
        if (validate->parsed()) {
            const std::vector<std::string> diags =
                nsctrl::validate_config(cfg);
            for (const std::string& d : diags) std::cout << d << "\n";
            if (!diags.empty()) return 1;
            std::cout << "ok\n";
            return 0;
        }
        std::optional<std::string> out;
        if (out_opt->count() > 0) out = output_override;
        std::optional<std::uint64_t> seed;
        if (seed_opt->count() > 0) seed = seed_override;
        return nsctrl::run_experiment(cfg, out, seed, parallel);
    } catch (const nsctrl::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const nsctrl::solver_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
