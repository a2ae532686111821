#pragma once

#include "binica/optim.hpp"
#include "binica/types.hpp"

#include <string>
#include <vector>

namespace binica {

struct RestartRecord {
    Seed seed = 0;
    double objective = 0.0;  // log-likelihood reached (higher is better)
    optim::Status status = optim::Status::converged;
    int iterations = 0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;  // set when failed
};

struct StageTimings {
    double pairwise_seconds = 0.0;
    double optimize_seconds = 0.0;
    double total_seconds = 0.0;
};

/// Output of either estimator.
///
/// `objective` is the maximized log-likelihood of the method (scaled Gaussian
/// for BLICA, full binary likelihood for full MLE) evaluated at the returned
/// parameters. Mixing columns are normalized to unit length with the source
/// variances rescaled to match.
struct FitResult {
    std::string method;
    Matrix mixing;
    std::vector<Vector> source_variances;
    std::vector<Vector> scales;        // BLICA: diagonals of Q^u
    std::vector<Vector> source_means;  // full MLE only
    double objective = 0.0;
    optim::Status status = optim::Status::converged;
    std::vector<RestartRecord> restarts;
    int best_restart = -1;
    StageTimings timings;
    bool likely_non_identifiable = false;
    int degenerate_pairs = 0;
};

}  // namespace binica
