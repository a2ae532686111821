#pragma once

#include "binica/dataset.hpp"
#include "binica/fit_result.hpp"
#include "binica/model.hpp"
#include "binica/optim.hpp"
#include "binica/types.hpp"

#include <optional>
#include <vector>

namespace binica {

/// Sufficient 2x2 tables of every pair in every segment.
///
/// Built either from observed rows (integer weights, N_u = segment size) or
/// from a model's exact distribution (probabilities, N_u = 1).
struct PairwiseTables {
    int n = 0;
    int n_u = 0;
    bool exact = false;
    std::vector<double> totals;                // N_u
    std::vector<std::vector<double>> ones;     // [u][i]: weight of x_i = 1
    std::vector<std::vector<PairCells>> cells; // [u][pair_index(i, j, n)]

    /// Position of the pair i < j in row-major upper-triangle order.
    static std::size_t pair_index(int i, int j, int n);
    [[nodiscard]] std::size_t pair_count() const { return static_cast<std::size_t>(n) * (n - 1) / 2; }
};

/// Counts from data. Throws DataError naming an empty segment.
PairwiseTables tabulate_pairs(const SegmentedBinaryDataset& data);

/// Exact pair probabilities of every segment of `model`.
PairwiseTables exact_pair_tables(const BicaModel& model);

/// Per-segment marginal means and correlation matrices of q (unit variances).
struct PairwiseStats {
    std::vector<Vector> means;
    std::vector<Matrix> correlations;
    std::vector<double> counts;  // N_u, used as objective weights
    int degenerate_pairs = 0;

    [[nodiscard]] int n() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
    [[nodiscard]] int n_u() const { return static_cast<int>(means.size()); }
};

/// Clamps a marginal frequency into [1/(2N), 1 - 1/(2N)].
double clamp_marginal(double p1, double count);

/// -Phi^{-1}(p1): the q-mean whose unit-variance marginal gives P(x = 1) = p1.
double estimate_marginal_mean(double p1);

/// Sum over the four cells of weight * log P(cell) for a unit-variance
/// bivariate normal. -infinity if a positive-weight cell has probability
/// below 1e-300. Throws std::domain_error for |rho| >= 1.
double pairwise_loglik(const PairCells& cells, const Eigen::Vector2d& means, double rho);

struct CorrelationEstimate {
    double rho = 0.0;
    bool degenerate = false;  // a margin of the table is empty; rho set to 0
};

/// Brent maximization of pairwise_loglik over [-1 + 1e-9, 1 - 1e-9].
CorrelationEstimate estimate_pairwise_correlation(const PairCells& cells, const Eigen::Vector2d& means);

/// Marginal means and pairwise correlations for all segments, parallel over
/// (segment, pair) tasks.
PairwiseStats compute_pairwise_stats(const PairwiseTables& tables, unsigned workers = 0);

/// Warton shrinkage toward the identity targeting condition number r:
/// delta = max(0, (l_1 - r l_n)/(r - 1)), result (C + delta I)/(1 + delta).
/// Throws ParameterError for r <= 1.
Matrix regularize_correlation(const Matrix& c, double r);

/// Parameters of the scaled Gaussian likelihood,
/// Sigma^u = Q^u (I + A diag(exp(log_variances[u])) A^T) Q^u with
/// Q^u = diag(exp(log_scales[u])).
///
/// Flattened layout: A row-major, then the log variances of each segment,
/// then the log scales of each segment.
struct MomentMatchParams {
    Matrix mixing;
    std::vector<Vector> log_variances;
    std::vector<Vector> log_scales;

    [[nodiscard]] Vector flatten() const;
    static MomentMatchParams unflatten(const Vector& flat, int n, int n_z, int n_u);
    static Eigen::Index flat_size(int n, int n_z, int n_u);
};

/// Value and analytic gradient (flattened layout) of
/// l = sum_u (N_u / 2) [-log det Sigma^u - tr(C^u (Sigma^u)^{-1})].
/// Returns -infinity with a zero gradient if some Sigma^u is not positive definite.
optim::ObjectiveEval scaled_gaussian_loglik(const MomentMatchParams& params, const PairwiseStats& stats);

struct MomentMatchConfig {
    int restarts = 3;
    optim::OptimConfig optim;
};

/// Maximizes scaled_gaussian_loglik from `restarts` random starts and keeps
/// the best. Throws FactorizationError if every restart fails.
FitResult fit_moment_matching(const PairwiseStats& stats, int n_z, const MomentMatchConfig& config, Seed seed);

struct BlicaConfig {
    /// Condition-number target of the regularizer; nullopt disables it.
    std::optional<double> regularization = 1000.0;
    /// Exact pair tables carry no sampling noise, so they skip regularization
    /// unless this is set.
    bool regularize_exact = false;
    MomentMatchConfig fit;
};

/// Heuristic flag for configurations where the mixing is not expected to be
/// identifiable (n = 2, at most two segments, or a negative counting balance).
bool likely_non_identifiable(int n, int n_z, int n_u);

/// Full pipeline from data or from exact pairwise tables.
FitResult blica_estimate(const PairwiseTables& tables, int n_z, const BlicaConfig& config, Seed seed);
FitResult blica_estimate(const SegmentedBinaryDataset& data, int n_z, const BlicaConfig& config, Seed seed);
FitResult blica_estimate_exact(const BicaModel& model, int n_z, const BlicaConfig& config, Seed seed);

}  // namespace binica
