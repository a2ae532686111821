#include "binica/blica.hpp"
#include "binica/error.hpp"

#include <chrono>

namespace binica {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

FitResult run_pipeline(const Clock::time_point start, const PairwiseTables& tables, int n_z,
                       const BlicaConfig& config, Seed seed) {
    if (config.regularization && !(*config.regularization > 1.0)) {
        throw ParameterError("blica: regularization target r must exceed 1");
    }
    PairwiseStats stats = compute_pairwise_stats(tables);
    if (config.regularization && (!tables.exact || config.regularize_exact)) {
        for (auto& c : stats.correlations) {
            c = regularize_correlation(c, *config.regularization);
        }
    }
    const double pairwise_seconds = seconds_since(start);

    const auto fit_start = Clock::now();
    FitResult fit = fit_moment_matching(stats, n_z, config.fit, seed);
    fit.timings.pairwise_seconds = pairwise_seconds;
    fit.timings.optimize_seconds = seconds_since(fit_start);
    fit.timings.total_seconds = seconds_since(start);
    return fit;
}

}  // namespace

bool likely_non_identifiable(int n, int n_z, int n_u) {
    if (n <= 2 || n_u <= 2) {
        return true;
    }
    return n == n_z && heuristic_count(n, n_u) < 0;
}

FitResult blica_estimate(const PairwiseTables& tables, int n_z, const BlicaConfig& config, Seed seed) {
    return run_pipeline(Clock::now(), tables, n_z, config, seed);
}

FitResult blica_estimate(const SegmentedBinaryDataset& data, int n_z, const BlicaConfig& config, Seed seed) {
    const auto start = Clock::now();
    return run_pipeline(start, tabulate_pairs(data), n_z, config, seed);
}

FitResult blica_estimate_exact(const BicaModel& model, int n_z, const BlicaConfig& config, Seed seed) {
    const auto start = Clock::now();
    return run_pipeline(start, exact_pair_tables(model), n_z, config, seed);
}

}  // namespace binica
