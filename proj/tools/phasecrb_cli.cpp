#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "phasecrb/cli.hpp"

namespace {

using namespace phasecrb;

struct GlobalArgs {
    std::string config_path;
    std::string out_dir;
    std::vector<std::string> sets;
    std::optional<uint64_t> seed;
    bool exact = false;
    bool first_order = false;
};

ProblemConfig build_config(const GlobalArgs& args) {
    ProblemConfig cfg;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw ConfigError("cannot open config file " + args.config_path);
        std::stringstream ss;
        ss << in.rdbuf();
        for (const auto& [k, v] : parse_flat_config(ss.str()))
            apply_config_entry(cfg, k, v);
    }
    for (const auto& kv : args.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects key=value, got '" + kv + "'");
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (args.seed) cfg.seed = *args.seed;
    if (args.exact && args.first_order)
        throw ConfigError("--exact and --first-order are mutually exclusive");
    if (args.exact) cfg.exact = true;
    if (args.first_order) cfg.exact = false;
    cfg.finalize();
    return cfg;
}

void add_global_options(CLI::App* app, GlobalArgs& args) {
    app->add_option("--config", args.config_path, "Flat key = value config file");
    app->add_option("--out", args.out_dir, "Output directory for reports");
    app->add_option("--seed", args.seed, "Master RNG seed");
    app->add_option("--set", args.sets, "Override a config key (key=value)")
        ->take_all();
    auto* ex = app->add_flag("--exact", args.exact, "Exact quadrature integrals");
    app->add_flag("--first-order", args.first_order,
                  "First-order closed-form integrals")
        ->excludes(ex);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum precision bounds and optimal projection modes for "
                 "phase-object estimation"};
    app.require_subcommand(1);

    GlobalArgs qfim_args, modes_args, probs_args, sim_args, sweep_args, val_args;
    cli::SweepRequest sweep_req;
    std::optional<double> probs_kdh, probs_hdalpha;
    std::optional<double> sim_kdh, sim_hdalpha, sim_photons;
    std::optional<int> sim_trials;

    auto* qfim = app.add_subcommand("qfim", "Fisher matrices and precision bounds");
    add_global_options(qfim, qfim_args);

    auto* modes = app.add_subcommand("modes", "Export the projection-mode profiles");
    add_global_options(modes, modes_args);

    auto* probs = app.add_subcommand("probs", "Detection probabilities at an offset");
    add_global_options(probs, probs_args);
    probs->add_option("--kdh", probs_kdh, "Scaled height offset k*dh");
    probs->add_option("--hdalpha", probs_hdalpha, "Scaled steepness offset h0*dalpha");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo estimation trials");
    add_global_options(sim, sim_args);
    sim->add_option("--kdh", sim_kdh, "True scaled height offset");
    sim->add_option("--hdalpha", sim_hdalpha, "True scaled steepness offset");
    sim->add_option("--trials", sim_trials, "Number of trials");
    sim->add_option("--photons", sim_photons, "Photons per trial");

    auto* sweep = app.add_subcommand("sweep", "Parameter sweep to CSV");
    add_global_options(sweep, sweep_args);
    sweep->add_option("--axis", sweep_req.axis, "One of w, alpha, N, dh, dalpha")
        ->required();
    sweep->add_option("--from", sweep_req.from, "Range start")->required();
    sweep->add_option("--to", sweep_req.to, "Range end")->required();
    sweep->add_option("--points", sweep_req.points, "Number of points")->required();
    sweep->add_flag("--log", sweep_req.log_spacing, "Logarithmic spacing");

    auto* val = app.add_subcommand("validate", "Internal consistency suite");
    add_global_options(val, val_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (qfim->parsed()) return cli::cmd_qfim(build_config(qfim_args), std::cout);
        if (modes->parsed()) return cli::cmd_modes(build_config(modes_args), std::cout);
        if (probs->parsed()) {
            ProblemConfig cfg = build_config(probs_args);
            if (probs_kdh) cfg.kdh = *probs_kdh;
            if (probs_hdalpha) cfg.hdalpha = *probs_hdalpha;
            return cli::cmd_probs(cfg, std::cout);
        }
        if (sim->parsed()) {
            ProblemConfig cfg = build_config(sim_args);
            if (sim_kdh) cfg.kdh = *sim_kdh;
            if (sim_hdalpha) cfg.hdalpha = *sim_hdalpha;
            if (sim_trials) cfg.trials = *sim_trials;
            if (sim_photons) cfg.photons = *sim_photons;
            return cli::cmd_simulate(cfg, std::cout);
        }
        if (sweep->parsed())
            return cli::cmd_sweep(build_config(sweep_args), sweep_req, std::cout);
        if (val->parsed()) return cli::cmd_validate(build_config(val_args), std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return cli::kConfigError;
    } catch (const DegenerateOmega& e) {
        std::cerr << "numerical failure: " << e.what() << "\n"
                  << "hint: the chosen parameters are locally indistinguishable; "
                     "change the reference point or estimate fewer parameters\n";
        return cli::kNumericalFailure;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return cli::kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return cli::kNumericalFailure;
    }
    return cli::kConfigError;
}
