// Command-line driver: gkin <simulate|steady|checks|tailfit|rescale-compare> [flags]

#include <iostream>

#include <CLI11.hpp>

#include "gkin/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Driven inelastic hard-sphere gas: particle simulation and checks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", gkin::kVersion);

    gkin::CommandOptions opts;
    std::string config, out = "out", checkpoint;
    std::uint64_t seed = 0;
    int threads = 0;
    double t_end = 0, alpha = 0, mu = 0, rho0 = 0;
    std::size_t particles = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "key=value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "master 64-bit seed");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory");
        sub->add_option("--t-end", t_end, "final time");
        sub->add_option("--particles", particles, "number of particles");
        sub->add_option("--alpha", alpha, "restitution coefficient in (0,1]");
        sub->add_option("--mu", mu, "diffusion coefficient");
        sub->add_option("--rho0", rho0, "mass density");
    };

    auto* simulate = app.add_subcommand("simulate", "time series CSV and checkpoints");
    add_common(simulate);
    simulate->add_option("--checkpoint", checkpoint, "resume from a checkpoint")->check(CLI::ExistingFile);
    auto* steady = app.add_subcommand("steady", "run to steady state, emit histogram and tail fit");
    add_common(steady);
    auto* checks = app.add_subcommand("checks", "randomized inequality suites");
    add_common(checks);
    checks->add_option("--samples", opts.samples, "samples per suite");
    auto* tailfit = app.add_subcommand("tailfit", "tail fit of a checkpoint");
    add_common(tailfit);
    tailfit->add_option("--checkpoint", checkpoint, "input checkpoint")->required()->check(CLI::ExistingFile);
    auto* rescale = app.add_subcommand("rescale-compare", "paired runs under the similarity scaling");
    add_common(rescale);
    rescale->add_option("--replicas", opts.replicas, "replica pairs")->check(CLI::Range(2, 1000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : gkin::kExitConfig;
    }

    auto* sub = app.get_subcommands().front();
    auto given = [&](const char* flag) { return sub->count(flag) > 0; };
    if (given("--config")) opts.config = config;
    if (given("--seed")) opts.seed = seed;
    if (given("--threads")) opts.threads = threads;
    opts.out = out;
    if (given("--t-end")) opts.t_end = t_end;
    if (given("--particles")) opts.particles = particles;
    if (given("--alpha")) opts.alpha = alpha;
    if (given("--mu")) opts.mu = mu;
    if (given("--rho0")) opts.rho0 = rho0;
    if (!checkpoint.empty()) opts.checkpoint = checkpoint;

    return gkin::run_command(sub->get_name(), opts, std::cerr);
}
