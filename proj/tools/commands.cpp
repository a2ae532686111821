#include "commands.hpp"

#include <binica/blica.hpp>
#include <binica/error.hpp>
#include <binica/eval.hpp>
#include <binica/experiments.hpp>
#include <binica/fullmle.hpp>
#include <binica/io.hpp>
#include <binica/linalg.hpp>
#include <binica/model.hpp>
#include <binica/parallel.hpp>

#include <fstream>
#include <iostream>
#include <numeric>

namespace blica_cli {

namespace {

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out || !(out << text)) {
        throw binica::IoError("cannot write " + path);
    }
}

std::optional<double> per_restart_budget(const std::optional<double>& total, int restarts) {
    if (!total) {
        return std::nullopt;
    }
    if (!(*total > 0.0)) {
        throw UsageError("--budget-secs must be positive");
    }
    return *total / restarts;
}

}  // namespace

int cmd_generate(const GenerateOptions& opts) {
    if (opts.n < 1 || opts.n_z < 1 || opts.n_u < 1 || opts.samples < 1) {
        throw UsageError("--n, --nz, --nu and --samples must be positive");
    }
    if (opts.n_z > opts.n) {
        throw UsageError("--nz must not exceed --n");
    }
    const binica::BicaModel model = binica::random_model(opts.n, opts.n_z, opts.n_u, opts.seed);
    const binica::SegmentedBinaryDataset data =
        binica::sample(model, opts.samples, binica::derive_seed(opts.seed, 0xda7a));
    binica::io::write_model(opts.out_prefix + ".model.json", model);
    binica::io::write_dataset(opts.out_prefix + ".data.csv", data);
    std::cout << "n=" << model.n() << " n_z=" << model.n_z() << " n_u=" << model.n_u()
              << " rows=" << data.size() << " condition_number=" << binica::num::condition_number(model.mixing)
              << '\n'
              << "wrote " << opts.out_prefix << ".model.json and " << opts.out_prefix << ".data.csv\n";
    return 0;
}

int cmd_fit(const FitOptions& opts) {
    if (opts.method != "blica" && opts.method != "fullmle") {
        throw UsageError("--method must be blica or fullmle");
    }
    if (opts.restarts < 1) {
        throw UsageError("--restarts must be positive");
    }
    if (opts.exact && opts.method != "blica") {
        throw UsageError("--exact is only supported with --method blica");
    }
    if (!opts.no_regularization && !(opts.r > 1.0)) {
        throw UsageError("--r must exceed 1");
    }
    binica::optim::OptimConfig optim;
    optim.wall_clock_budget = per_restart_budget(opts.budget_secs, opts.restarts);

    binica::FitResult fit;
    if (opts.method == "blica") {
        binica::BlicaConfig config;
        config.regularization = opts.no_regularization ? std::nullopt : std::optional<double>(opts.r);
        config.fit.restarts = opts.restarts;
        config.fit.optim = optim;
        if (opts.exact) {
            const binica::BicaModel model = binica::io::read_model(opts.input);
            fit = binica::blica_estimate_exact(model, opts.n_z.value_or(model.n_z()), config, opts.seed);
        } else {
            const auto data = binica::io::read_dataset(opts.input);
            fit = binica::blica_estimate(data, opts.n_z.value_or(data.n()), config, opts.seed);
        }
    } else {
        const auto data = binica::io::read_dataset(opts.input);
        binica::FullMleConfig config;
        config.restarts = opts.restarts;
        config.optim = optim;
        fit = binica::full_mle_fit(data, opts.n_z.value_or(data.n()), config, opts.seed);
    }

    const std::string doc = binica::io::fit_result_to_json(fit).dump(2) + "\n";
    if (opts.out.empty()) {
        std::cout << doc;
    } else {
        write_text(opts.out, doc);
        std::cout << "method=" << fit.method << " objective=" << fit.objective
                  << " status=" << binica::optim::to_string(fit.status)
                  << " total_seconds=" << fit.timings.total_seconds << '\n';
    }
    if (fit.likely_non_identifiable) {
        std::cerr << "note: this (n, n_z, n_u) configuration is not expected to identify the mixing matrix\n";
    }
    return 0;
}

int cmd_eval(const EvalOptions& opts) {
    const binica::BicaModel model = binica::io::read_model(opts.model);
    const binica::FitResult fit = binica::io::fit_result_from_json(binica::io::read_json_file(opts.result));
    if (fit.mixing.rows() != model.mixing.rows() || fit.mixing.cols() != model.mixing.cols()) {
        throw binica::DimensionError("eval: model mixing is " + std::to_string(model.n()) + " x " +
                                     std::to_string(model.n_z()) + " but result mixing is " +
                                     std::to_string(fit.mixing.rows()) + " x " + std::to_string(fit.mixing.cols()));
    }
    const double mcs = binica::mean_cosine_similarity(model.mixing, fit.mixing);
    binica::io::Json doc;
    doc["format_version"] = binica::io::kFormatVersion;
    doc["mcs"] = mcs;
    doc["log_error"] = binica::log_error(mcs);
    const std::string text = doc.dump(2) + "\n";
    std::cout << text;
    if (!opts.out.empty()) {
        write_text(opts.out, text);
    }
    return 0;
}

int cmd_sweep(const SweepOptions& opts) {
    namespace ex = binica::experiments;
    const ex::SweepKind kind = [&] {
        try {
            return ex::parse_kind(opts.kind);
        } catch (const binica::ParameterError& e) {
            throw UsageError(e.what());
        }
    }();

    std::ofstream file;
    if (!opts.out.empty()) {
        file.open(opts.out);
        if (!file) {
            throw binica::IoError("cannot write " + opts.out);
        }
    }
    std::ostream& out = opts.out.empty() ? std::cout : file;

    if (kind == ex::SweepKind::id_table) {
        std::vector<int> ns = opts.n;
        std::vector<int> nus = opts.n_u;
        if (ns.empty()) {
            ns.resize(9);
            std::iota(ns.begin(), ns.end(), 2);
        }
        if (nus.empty()) {
            nus.resize(5);
            std::iota(nus.begin(), nus.end(), 2);
        }
        ex::write_id_table(out, ns, nus);
        return 0;
    }

    ex::SweepConfig config;
    config.kind = kind;
    config.seed = opts.seed;
    config.grid.n = opts.n;
    config.grid.n_u = opts.n_u;
    config.grid.n_z = opts.n_z;
    config.grid.samples = opts.samples;
    config.grid.replicates = opts.replicates;
    config.grid.methods = opts.methods;
    if (!(opts.r > 1.0)) {
        throw UsageError("--r must exceed 1");
    }
    config.blica.regularization = opts.r;
    config.blica.fit.restarts = opts.restarts;
    config.blica.fit.optim.wall_clock_budget = per_restart_budget(opts.budget_secs, opts.restarts);
    config.fullmle.restarts = opts.restarts;
    config.fullmle.optim.wall_clock_budget = config.blica.fit.optim.wall_clock_budget;

    // Desk-scale defaults.
    if (config.grid.n.empty()) {
        config.grid.n = kind == ex::SweepKind::scaling ? std::vector<int>{5, 10, 20, 30} : std::vector<int>{5, 10};
    }
    if (config.grid.n_u.empty()) {
        config.grid.n_u = kind == ex::SweepKind::identifiability ? std::vector<int>{3, 5} : std::vector<int>{40};
    }
    if (config.grid.samples.empty() && kind != ex::SweepKind::identifiability) {
        config.grid.samples = {50, 1000};
    }
    for (const int n : config.grid.n) {
        const int cap = kind == ex::SweepKind::scaling ? 30 : 10;
        if (n < 2 || n > cap) {
            throw UsageError("--n values for " + opts.kind + " must lie in [2, " + std::to_string(cap) + "]");
        }
    }
    try {
        const auto rows = ex::run_sweep(config);
        ex::write_sweep_header(out);
        for (const auto& row : rows) {
            ex::write_sweep_row(out, row);
        }
    } catch (const binica::ParameterError& e) {
        throw UsageError(e.what());
    }
    return 0;
}

}  // namespace blica_cli
