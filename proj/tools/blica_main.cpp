#include "commands.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Binary ICA: simulate, fit (BLICA or full MLE), evaluate and sweep"};
    app.require_subcommand(1);

    blica_cli::GenerateOptions gen;
    auto* generate = app.add_subcommand("generate", "Draw a random model and sample data from it");
    generate->add_option("--n", gen.n, "Observed variables")->required();
    generate->add_option("--nz", gen.n_z, "Sources")->required();
    generate->add_option("--nu", gen.n_u, "Segments")->required();
    generate->add_option("--samples", gen.samples, "Samples per segment")->required();
    generate->add_option("--seed", gen.seed, "Random seed");
    generate->add_option("--out", gen.out_prefix, "Output prefix for PREFIX.model.json and PREFIX.data.csv")
        ->required();

    blica_cli::FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate the mixing matrix");
    fit_cmd->add_option("input", fit.input, "Data CSV, or model JSON with --exact")->required();
    fit_cmd->add_option("--method", fit.method, "blica or fullmle")->check(CLI::IsMember({"blica", "fullmle"}));
    fit_cmd->add_flag("--exact", fit.exact, "Fit from the exact pairwise distributions of a model file");
    fit_cmd->add_option("--nz", fit.n_z, "Sources to estimate (default: n, or the model's n_z with --exact)");
    fit_cmd->add_option("--r", fit.r, "Regularization condition-number target");
    fit_cmd->add_flag("--no-regularization", fit.no_regularization, "Skip correlation regularization");
    fit_cmd->add_option("--restarts", fit.restarts, "Random restarts");
    fit_cmd->add_option("--seed", fit.seed, "Random seed");
    fit_cmd->add_option("--budget-secs", fit.budget_secs, "Wall-clock budget shared by the restarts");
    fit_cmd->add_option("--out", fit.out, "Result JSON path (default: stdout)");

    blica_cli::EvalOptions ev;
    auto* eval_cmd = app.add_subcommand("eval", "Mean cosine similarity of a result against its true model");
    eval_cmd->add_option("model", ev.model, "Model JSON")->required();
    eval_cmd->add_option("result", ev.result, "Result JSON")->required();
    eval_cmd->add_option("--out", ev.out, "Also write the report here");

    blica_cli::SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "Run an experiment grid and write TSV");
    sweep->add_option("kind", sw.kind, "id-table | identifiability | finite-sample | scaling")->required();
    sweep->add_option("--n", sw.n, "Observed-variable counts")->delimiter(',');
    sweep->add_option("--nu", sw.n_u, "Segment counts")->delimiter(',');
    sweep->add_option("--nz", sw.n_z, "Source counts (default: n)")->delimiter(',');
    sweep->add_option("--samples", sw.samples, "Samples per segment")->delimiter(',');
    sweep->add_option("--method", sw.methods, "blica and/or fullmle")->delimiter(',');
    sweep->add_option("--replicates", sw.replicates, "Models per cell");
    sweep->add_option("--r", sw.r, "Regularization condition-number target");
    sweep->add_option("--restarts", sw.restarts, "Restarts per fit");
    sweep->add_option("--seed", sw.seed, "Random seed");
    sweep->add_option("--budget-secs", sw.budget_secs, "Wall-clock budget per fit");
    sweep->add_option("--out", sw.out, "TSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*generate) {
            return blica_cli::cmd_generate(gen);
        }
        if (*fit_cmd) {
            return blica_cli::cmd_fit(fit);
        }
        if (*eval_cmd) {
            return blica_cli::cmd_eval(ev);
        }
        return blica_cli::cmd_sweep(sw);
    } catch (const blica_cli::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
