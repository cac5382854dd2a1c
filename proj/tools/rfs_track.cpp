#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rfs/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multi-target tracking with online clutter-rate and detection-probability estimation"};
    app.require_subcommand(1);

    std::string config, out, detections, gt, tracks, variant;
    std::uint64_t seed = 0;
    std::size_t runs = 0;
    double c = 10.0, p = 1.0, ell = 0.0;

    auto* simulate = app.add_subcommand("simulate", "generate ground truth and detections from a scenario");
    simulate->add_option("--config", config, "experiment config (JSON)")->required();
    simulate->add_option("--out", out, "output directory")->required();
    auto* sim_seed = simulate->add_option("--seed", seed, "override the config seed");

    auto* track = app.add_subcommand("track", "run a tracker over a detections file");
    track->add_option("--detections", detections, "detections CSV (frame,x,y)")->required();
    track->add_option("--config", config, "experiment config (JSON)")->required();
    track->add_option("--out", out, "output directory")->required();
    auto* track_variant = track->add_option("--variant", variant, "bootstrap | mm-cphd | mm-lambda-cphd");

    auto* evaluate = app.add_subcommand("evaluate", "OSPA and OSPA-T of tracks against ground truth");
    evaluate->add_option("--gt", gt, "ground-truth CSV")->required();
    evaluate->add_option("--tracks", tracks, "tracks CSV")->required();
    evaluate->add_option("--out", out, "output directory")->required();
    evaluate->add_option("--c", c, "cut-off")->capture_default_str();
    evaluate->add_option("--p", p, "order")->capture_default_str();
    auto* eval_ell = evaluate->add_option("--ell", ell, "label penalty (default: c)");

    auto* experiment = app.add_subcommand("experiment", "Monte Carlo replicates, evaluated and summarized");
    experiment->add_option("--config", config, "experiment config (JSON)")->required();
    experiment->add_option("--out", out, "output directory")->required();
    auto* exp_runs = experiment->add_option("--runs", runs, "override the run count");
    auto* exp_seed = experiment->add_option("--seed", seed, "override the base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : rfs::cli::kConfigError;
    }

    auto opt_seed = [&](CLI::Option* o) { return o->count() ? std::optional<std::uint64_t>(seed) : std::nullopt; };
    if (simulate->parsed()) return rfs::cli::cmd_simulate(config, out, opt_seed(sim_seed), std::cerr);
    if (track->parsed()) {
        return rfs::cli::cmd_track(detections, config, out,
                                   track_variant->count() ? std::optional<std::string>(variant) : std::nullopt, std::cerr);
    }
    if (evaluate->parsed()) {
        return rfs::cli::cmd_evaluate(gt, tracks, out, c, p,
                                      eval_ell->count() ? std::optional<double>(ell) : std::nullopt, std::cerr);
    }
    return rfs::cli::cmd_experiment(config, out, exp_runs->count() ? std::optional<std::size_t>(runs) : std::nullopt,
                                    opt_seed(exp_seed), std::cerr);
}
