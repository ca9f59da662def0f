// Experiment runner for hypernetwork-based hyperparameter optimization.
// Subcommands: run (JSON-configured experiment), compare (surrogate
// comparison), gradcheck (finite-difference battery).

#include <cstdint>
#include <string>

#include <CLI11.hpp>

#include "hypertrain/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hypertrain: gradient-based hyperparameter optimization through hypernetworks"};
    app.require_subcommand(1);

    std::string run_config, compare_config;
    hypertrain::Overrides run_ov, compare_ov;
    std::uint64_t run_seed = 0, compare_seed = 0, gradcheck_seed = 0;

    CLI::App* run = app.add_subcommand("run", "execute an experiment described by a JSON config");
    run->add_option("config", run_config, "path to the experiment JSON")->required();
    CLI::Option* run_seed_opt = run->add_option("--seed", run_seed, "override the config seed");
    run->add_option("--out", run_ov.out_dir, "override the output directory");
    run->add_flag("--paper-sigma", run_ov.paper_sigma, "use local sampling sd 1e-5 instead of the 1e-2 default");

    CLI::App* cmp = app.add_subcommand("compare", "run the GP / fixed-hypernet / trained-hypernet comparison");
    cmp->add_option("config", compare_config, "path to the experiment JSON")->required();
    CLI::Option* cmp_seed_opt = cmp->add_option("--seed", compare_seed, "override the config seed");
    cmp->add_option("--out", compare_ov.out_dir, "override the output directory");
    cmp->add_flag("--paper-sigma", compare_ov.paper_sigma, "use local sampling sd 1e-5 instead of the 1e-2 default");

    CLI::App* gc = app.add_subcommand("gradcheck", "finite-difference check of every analytic gradient path");
    gc->add_option("--seed", gradcheck_seed, "seed for probe points");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) {
        run_ov.has_seed = run_seed_opt->count() > 0;
        run_ov.seed = run_seed;
        return hypertrain::run_experiment(run_config, run_ov);
    }
    if (cmp->parsed()) {
        compare_ov.has_seed = cmp_seed_opt->count() > 0;
        compare_ov.seed = compare_seed;
        return hypertrain::run_compare(compare_config, compare_ov);
    }
    return hypertrain::run_gradcheck_cli(gradcheck_seed);
}
