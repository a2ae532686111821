#include "binica/experiments.hpp"

#include "binica/error.hpp"
#include "binica/eval.hpp"
#include "binica/model.hpp"
#include "binica/parallel.hpp"

#include <iomanip>
#include <ostream>
#include <string>

namespace binica::experiments {

namespace {

struct Task {
    int n;
    int n_z;
    int n_u;
    int samples;
    int replicate;
    std::string method;
};

std::vector<Task> expand(const SweepConfig& config) {
    const SweepGrid& g = config.grid;
    if (g.n.empty() || g.n_u.empty() || g.replicates < 1 || g.methods.empty()) {
        throw ParameterError("sweep: grid needs n, n_u, methods and replicates >= 1");
    }
    const bool exact = config.kind == SweepKind::identifiability;
    if (!exact && g.samples.empty()) {
        throw ParameterError("sweep: finite-sample and scaling sweeps need sample sizes");
    }
    for (const auto& m : g.methods) {
        if (m != "blica" && m != "fullmle") {
            throw ParameterError("sweep: unknown method '" + m + "'");
        }
        if (exact && m != "blica") {
            throw ParameterError("sweep: identifiability sweeps use exact pairwise tables (blica only)");
        }
    }
    const std::vector<int> samples = exact ? std::vector<int>{0} : g.samples;
    std::vector<Task> tasks;
    for (const int n : g.n) {
        const std::vector<int> n_zs = g.n_z.empty() ? std::vector<int>{n} : g.n_z;
        for (const int n_z : n_zs) {
            if (n_z > n) {
                continue;
            }
            for (const int n_u : g.n_u) {
                for (const int s : samples) {
                    for (int rep = 0; rep < g.replicates; ++rep) {
                        for (const auto& m : g.methods) {
                            tasks.push_back({n, n_z, n_u, s, rep, m});
                        }
                    }
                }
            }
        }
    }
    return tasks;
}

SweepRow run_task(const SweepConfig& config, const Task& t) {
    SweepRow row;
    row.kind = std::string(to_string(config.kind));
    row.n = t.n;
    row.n_z = t.n_z;
    row.n_u = t.n_u;
    row.samples = t.samples;
    row.replicate = t.replicate;
    row.method = t.method;
    // Models depend on the cell and replicate only, so methods and sample
    // sizes are compared on the same models.
    row.seed = derive_seed(config.seed, static_cast<std::uint64_t>(t.n) << 32 | static_cast<std::uint64_t>(t.n_z),
                           static_cast<std::uint64_t>(t.n_u), static_cast<std::uint64_t>(t.replicate));
    try {
        const BicaModel model = random_model(t.n, t.n_z, t.n_u, row.seed);
        const Seed fit_seed = derive_seed(row.seed, 0xf17);
        FitResult fit;
        if (config.kind == SweepKind::identifiability) {
            fit = blica_estimate_exact(model, t.n_z, config.blica, fit_seed);
        } else {
            const auto data = sample(model, t.samples, derive_seed(row.seed, 0xda7a, static_cast<std::uint64_t>(t.samples)));
            fit = t.method == "blica" ? blica_estimate(data, t.n_z, config.blica, fit_seed)
                                      : full_mle_fit(data, t.n_z, config.fullmle, fit_seed);
        }
        row.status = std::string(optim::to_string(fit.status));
        row.mcs = mean_cosine_similarity(model.mixing, fit.mixing);
        row.log_error = log_error(row.mcs);
        row.objective = fit.objective;
        row.pairwise_seconds = fit.timings.pairwise_seconds;
        row.optimize_seconds = fit.timings.optimize_seconds;
        row.total_seconds = fit.timings.total_seconds;
    } catch (const std::exception& ex) {
        row.status = "failed";
        row.error = ex.what();
    }
    return row;
}

std::string sanitize(std::string s) {
    for (char& c : s) {
        if (c == '\t' || c == '\n' || c == '\r') {
            c = ' ';
        }
    }
    return s;
}

}  // namespace

SweepKind parse_kind(std::string_view name) {
    if (name == "id-table") return SweepKind::id_table;
    if (name == "identifiability") return SweepKind::identifiability;
    if (name == "finite-sample") return SweepKind::finite_sample;
    if (name == "scaling") return SweepKind::scaling;
    throw ParameterError("unknown sweep kind '" + std::string(name) + "'");
}

std::string_view to_string(SweepKind kind) {
    switch (kind) {
        case SweepKind::id_table: return "id-table";
        case SweepKind::identifiability: return "identifiability";
        case SweepKind::finite_sample: return "finite-sample";
        case SweepKind::scaling: return "scaling";
    }
    return "unknown";
}

std::vector<std::vector<long>> id_table(const std::vector<int>& ns, const std::vector<int>& n_us) {
    std::vector<std::vector<long>> table;
    for (const int n_u : n_us) {
        std::vector<long> row;
        for (const int n : ns) {
            row.push_back(heuristic_count(n, n_u));
        }
        table.push_back(std::move(row));
    }
    return table;
}

void write_id_table(std::ostream& out, const std::vector<int>& ns, const std::vector<int>& n_us) {
    const auto table = id_table(ns, n_us);
    out << "n_u\\n";
    for (const int n : ns) {
        out << '\t' << n;
    }
    out << '\n';
    for (std::size_t a = 0; a < n_us.size(); ++a) {
        out << n_us[a];
        for (const long v : table[a]) {
            out << '\t' << v;
        }
        out << '\n';
    }
}

std::vector<SweepRow> run_sweep(const SweepConfig& config) {
    if (config.kind == SweepKind::id_table) {
        throw ParameterError("run_sweep: use write_id_table for the id-table kind");
    }
    const std::vector<Task> tasks = expand(config);
    std::vector<SweepRow> rows(tasks.size());
    parallel_for(tasks.size(), [&](std::size_t i) { rows[i] = run_task(config, tasks[i]); }, config.workers);
    return rows;
}

void write_sweep_header(std::ostream& out) {
    out << "kind\tn\tn_z\tn_u\tsamples\treplicate\tseed\tmethod\tstatus\tmcs\tlog_error\tobjective"
           "\tpairwise_seconds\toptimize_seconds\ttotal_seconds\terror\n";
}

void write_sweep_row(std::ostream& out, const SweepRow& r) {
    const auto old_precision = out.precision(15);
    out << r.kind << '\t' << r.n << '\t' << r.n_z << '\t' << r.n_u << '\t' << r.samples << '\t' << r.replicate
        << '\t' << r.seed << '\t' << r.method << '\t' << r.status << '\t' << r.mcs << '\t' << r.log_error << '\t'
        << r.objective << '\t' << r.pairwise_seconds << '\t' << r.optimize_seconds << '\t' << r.total_seconds
        << '\t' << sanitize(r.error) << '\n';
    out.precision(old_precision);
}

}  // namespace binica::experiments
