#pragma once

#include "binica/dataset.hpp"
#include "binica/mvn.hpp"
#include "binica/types.hpp"

#include <numbers>
#include <vector>

namespace binica {

/// pi/8: squared coefficient of the probit link Phi(sqrt(pi/8) * y).
inline constexpr double kLinkScaleSquared = std::numbers::pi / 8.0;

/// Mixing matrix plus per-segment source means and (diagonal) variances.
struct BicaModel {
    Matrix mixing;                         // n x n_z
    std::vector<Vector> segment_means;     // n_u vectors of length n_z
    std::vector<Vector> segment_variances; // n_u positive vectors of length n_z

    [[nodiscard]] int n() const { return static_cast<int>(mixing.rows()); }
    [[nodiscard]] int n_z() const { return static_cast<int>(mixing.cols()); }
    [[nodiscard]] int n_u() const { return static_cast<int>(segment_means.size()); }

    /// Throws ParameterError / DimensionError when an invariant fails
    /// (shapes, positive variances, full column rank of the mixing).
    void validate() const;
};

/// Mean and covariance of the latent Gaussian q in every segment.
struct QParams {
    std::vector<Vector> means;
    std::vector<Matrix> covariances;

    [[nodiscard]] int n() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
    [[nodiscard]] int n_u() const { return static_cast<int>(means.size()); }
};

/// Positive diagonals of the per-segment scaling matrices Q^u.
struct ScalingDiagonals {
    std::vector<Vector> scales;
};

/// mu_q = -sqrt(pi/8) A mu_z, Sigma_q = I + (pi/8) A Sigma_z A^T.
QParams q_params(const BicaModel& model);

/// mu -> Q mu, Sigma -> Q Sigma Q per segment. Throws ParameterError for
/// non-positive scales.
QParams apply_scaling(const QParams& qp, const ScalingDiagonals& scales);

/// Draws samples_per_segment observations in every segment.
SegmentedBinaryDataset sample(const BicaModel& model, int samples_per_segment, Seed seed);

/// Lower/upper integration bounds of q for assignment mask x (bit i = x_i):
/// x_i = 1 -> (-inf, 0], x_i = 0 -> (0, inf).
num::Rectangle assignment_bounds(unsigned mask, int n);

struct JointProbabilities {
    std::vector<double> probabilities;  // indexed by assignment mask
    double error = 0.0;                 // sum of per-assignment error estimates
};

inline constexpr int kMaxExactJointDimension = 12;

/// Probabilities of all 2^n assignments for q ~ N(mean, cov).
JointProbabilities joint_probs(const Vector& mean, const Matrix& cov,
                               const num::QmcConfig& config = {});

/// Exact binary distribution of one segment. Throws DimensionError for n > 12.
JointProbabilities exact_joint_probs(const BicaModel& model, int segment,
                                     const num::QmcConfig& config = {});

/// Four cell probabilities of the pair (q_i, q_j) for a bivariate normal.
PairCells pair_cell_probs(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov);

/// Exact 2x2 marginal distribution of (x_i, x_j) in a segment.
PairCells exact_pairwise_probs(const BicaModel& model, int segment, int i, int j);

/// Reverses the rows of a 2x2 mixing and re-solves the means so that every
/// segment keeps its binary distribution. Throws FactorizationError if the
/// mixing is singular.
BicaModel row_swap_equivalent(const BicaModel& model);

/// Source means for `source` in `segment` that reproduce target's binary
/// distribution there. Requires n == n_z, invertible mixings, and equal
/// q-correlation matrices (CorrelationMismatchError otherwise, checked at 1e-8).
Vector adjust_means_equivalent(const BicaModel& target, const BicaModel& source, int segment);

/// Statistics minus unknowns of the counting heuristic for n == n_z:
/// n_u (n^2 - n)/2 + 2 n_u n - (n^2 + 3 n_u n).
long heuristic_count(int n, int n_u);

/// Random model following the simulation protocol: means ~ U(-0.5, 0.5),
/// standard deviations ~ U(0.5, 3), mixing entries ~ U(-3, 3) resampled until
/// the condition number is below mixing_condition_threshold(n, n_z).
BicaModel random_model(int n, int n_z, int n_u, Seed seed);

/// 20 for n < 20; otherwise the 75th percentile of condition numbers of 1000
/// random n x n_z U(-3, 3) matrices (cached, fixed seed).
double mixing_condition_threshold(int n, int n_z);

}  // namespace binica
