#pragma once

#include "binica/dataset.hpp"
#include "binica/fit_result.hpp"
#include "binica/model.hpp"
#include "binica/mvn.hpp"
#include "binica/optim.hpp"

#include <vector>

namespace binica {

inline constexpr int kMaxFullMleDimension = 10;

/// Parameters of the full likelihood. Flattened layout: A row-major, then the
/// source means of each segment, then the log variances of each segment.
struct FullMleParams {
    Matrix mixing;
    std::vector<Vector> means;
    std::vector<Vector> log_variances;

    [[nodiscard]] Vector flatten() const;
    static FullMleParams unflatten(const Vector& flat, int n, int n_z, int n_u);
    static Eigen::Index flat_size(int n, int n_z, int n_u);

    [[nodiscard]] BicaModel to_model() const;
};

/// Per-segment assignment counts c(x), indexed by mask.
using AssignmentCounts = std::vector<std::vector<double>>;

/// sum_u sum_x c(x) log P(x | u), each orthant probability from
/// mvn_rectangle_prob with the given (fixed-seed) QMC settings. Probabilities
/// are floored at 1e-300 before the log. Throws DimensionError for n > 10.
double full_loglik(const FullMleParams& params, const AssignmentCounts& counts,
                   const num::QmcConfig& qmc = {});

struct FullMleConfig {
    int restarts = 3;
    optim::OptimConfig optim;
    /// No variable reordering so the objective is smooth in the parameters.
    num::QmcConfig qmc{2, 256, 0x5eed5eedULL, false};
    double fd_step = 1e-5;
};

/// Quasi-Newton maximization of full_loglik with central-difference gradients.
/// The optimizer budget in config.optim applies to each restart.
FitResult full_mle_fit(const AssignmentCounts& counts, int n, int n_z, const FullMleConfig& config, Seed seed);
FitResult full_mle_fit(const SegmentedBinaryDataset& data, int n_z, const FullMleConfig& config, Seed seed);

}  // namespace binica
