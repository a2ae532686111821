#pragma once

#include "binica/normal.hpp"
#include "binica/types.hpp"

namespace binica::num {

struct GaussianParams {
    Vector mean;
    Matrix covariance;
};

/// Randomized quasi-Monte Carlo settings for mvn_rectangle_prob.
struct QmcConfig {
    int randomizations = 8;
    int lattice_points = 1023;
    Seed seed = 0x9e3779b97f4a7c15ULL;
    /// Genz-Bretz variable prioritization. Reordering is a discrete choice, so
    /// callers that differentiate the result numerically may want it off.
    bool reorder = true;
};

struct RectangleProb {
    double probability = 0.0;
    double error = 0.0;  // standard error over randomizations
};

inline constexpr int kMaxMvnDimension = 25;

/// P(lower < X < upper) for X ~ N(mean, covariance).
///
/// Dimensions 1 and 2 are evaluated in closed form (error 0). Higher
/// dimensions use the Genz separation-of-variables transform with a randomly
/// shifted Richtmyer lattice, baker's periodization and antithetic pairs.
/// Deterministic for a given config.seed.
///
/// Throws DimensionError beyond kMaxMvnDimension and FactorizationError if the
/// covariance is not positive definite.
RectangleProb mvn_rectangle_prob(const Rectangle& rect, const GaussianParams& params,
                                 const QmcConfig& config = {});

}  // namespace binica::num
