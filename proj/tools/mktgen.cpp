#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mktgen/commands.hpp"

namespace {

using namespace mktgen;

int exit_code(ErrorCode code)
{
    switch (code) {
    case ErrorCode::UsageError:
    case ErrorCode::ConfigError: return 2;
    case ErrorCode::Diverged: return 4;
    default: return 3;
    }
}

struct Common {
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::string out;

    void attach(CLI::App* app, bool with_preset = true)
    {
        app->add_option("--config", config, "experiment config (JSON)")->check(CLI::ExistingFile);
        if (with_preset)
            app->add_option("--preset", preset, "named preset applied before the config file");
        app->add_option("--seed", seed, "master seed (overrides config)");
        app->add_option("--out", out, "output path")->required();
    }

    config::ExperimentConfig load() const
    {
        std::optional<std::filesystem::path> path;
        if (config)
            path = *config;
        auto cfg = config::load_config(path, preset);
        if (seed)
            cfg.master_seed = *seed;
        return cfg;
    }
};

struct GenerateFlags {
    std::optional<std::string> seed_window;
    std::optional<Index> horizon;
    std::optional<int> gibbs_steps;

    void attach(CLI::App* app)
    {
        app->add_option("--seed-window", seed_window, "CSV whose last rows seed a conditional model")
            ->check(CLI::ExistingFile);
        app->add_option("--horizon", horizon, "rows to generate per path");
        app->add_option("--gibbs-steps", gibbs_steps, "Gibbs alternations per RBM sample");
    }

    cli::GenerateRequest request(const config::ExperimentConfig& cfg) const
    {
        cli::GenerateRequest req;
        req.n = cfg.generate.n;
        req.horizon = horizon.value_or(cfg.generate.horizon);
        req.gibbs_steps = gibbs_steps.value_or(cfg.generate.gibbs_steps);
        req.readout = cfg.generate.readout;
        require(req.gibbs_steps >= 1, ErrorCode::UsageError, "--gibbs-steps must be >= 1");
        require(req.horizon >= 0, ErrorCode::UsageError, "--horizon must be >= 0");
        if (seed_window)
            req.seed_window = read_csv_file(*seed_window);
        return req;
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Synthetic market data generators: simulate, train, generate, backtest, evaluate"};
    app.require_subcommand(1);

    Common sim;
    auto* simulate = app.add_subcommand("simulate-data", "simulate a benchmark dataset");
    sim.attach(simulate);

    Common tr;
    std::string train_data;
    auto* train = app.add_subcommand("train", "fit a model and write a model document");
    train->add_option("data", train_data, "training CSV")->required()->check(CLI::ExistingFile);
    tr.attach(train);

    Common gen;
    GenerateFlags gen_flags;
    std::string gen_model;
    auto* generate = app.add_subcommand("generate", "sample from a model document");
    generate->add_option("model", gen_model, "model document")->required()->check(CLI::ExistingFile);
    gen.attach(generate, false);
    gen_flags.attach(generate);

    Common mc;
    GenerateFlags mc_flags;
    std::optional<std::string> mc_model, mc_bootstrap;
    std::optional<Index> mc_reps;
    auto* backtest = app.add_subcommand("mc-backtest", "Monte-Carlo distribution of risk-parity backtest statistics");
    backtest->add_option("model", mc_model, "model document")->check(CLI::ExistingFile);
    backtest->add_option("--bootstrap", mc_bootstrap, "resample rows of this CSV instead of a model")
        ->check(CLI::ExistingFile);
    backtest->add_option("--reps", mc_reps, "replications (overrides config)");
    mc.attach(backtest);
    mc_flags.attach(backtest);

    Common ev;
    std::string ev_real, ev_synth;
    auto* evaluate = app.add_subcommand("evaluate", "compare a synthetic sample with real data");
    evaluate->add_option("real", ev_real, "real CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_option("synthetic", ev_synth, "synthetic CSV")->required()->check(CLI::ExistingFile);
    ev.attach(evaluate, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*simulate) {
            cli::cmd_simulate_data(sim.load(), sim.out);
        } else if (*train) {
            cli::cmd_train(tr.load(), train_data, tr.out);
        } else if (*generate) {
            const auto cfg = gen.load();
            cli::cmd_generate(gen_model, gen_flags.request(cfg), cfg.master_seed, gen.out);
        } else if (*backtest) {
            auto cfg = mc.load();
            cli::McSource src;
            if (mc_model)
                src.model = *mc_model;
            if (mc_bootstrap)
                src.bootstrap = *mc_bootstrap;
            src.request = mc_flags.request(cfg);
            if (!mc_flags.horizon && cfg.backtest.horizon > 0)
                src.request.horizon = cfg.backtest.horizon;
            cli::cmd_mc_backtest(cfg, src, mc_reps.value_or(cfg.backtest.n_reps), mc.out);
        } else if (*evaluate) {
            cli::cmd_evaluate(ev.load(), ev_real, ev_synth, ev.out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
