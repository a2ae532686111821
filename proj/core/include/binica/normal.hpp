#pragma once

#include "binica/types.hpp"

namespace binica::num {

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal CDF. Accepts +-infinity.
double normal_cdf(double x);

/// Upper tail 1 - Phi(x), computed without cancellation.
double normal_ccdf(double x);

/// Inverse of the standard normal CDF. Throws std::domain_error unless 0 < p < 1.
double normal_quantile(double p);

/// Wichura's AS241 without the refinement step (relative error near 1e-16).
/// Same domain as normal_quantile; used in hot sampling loops.
double normal_quantile_as241(double p);

/// Axis-aligned box with possibly infinite bounds.
struct Rectangle {
    Vector lower;
    Vector upper;

    [[nodiscard]] Eigen::Index dim() const { return lower.size(); }

    /// Throws ParameterError on length mismatch or lower > upper.
    void validate() const;
};

/// P(X > h, Y > k) for a standard bivariate normal with correlation rho.
///
/// Drezner-Wesolowsky / Genz algorithm with fixed Gauss-Legendre rules;
/// absolute accuracy around 1e-15. h and k may be infinite.
double bvn_upper(double h, double k, double rho);

/// Probability that a unit-variance bivariate normal with the given mean and
/// correlation falls in a 2-D rectangle. Throws std::domain_error if |corr| >= 1.
double bvn_rectangle_prob(const Rectangle& rect, const Eigen::Vector2d& mean, double corr);

}  // namespace binica::num
