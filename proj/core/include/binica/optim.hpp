#pragma once

#include "binica/types.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string_view>

namespace binica::optim {

/// Objective value with its gradient.
struct ObjectiveEval {
    double value = 0.0;
    Vector gradient;
};

using Objective = std::function<ObjectiveEval(const Vector&)>;

/// Thrown by an objective to stop a minimization early (e.g. its own time
/// limit hit mid-evaluation). minimize then returns the best iterate so far
/// with Status::budget_exhausted; at the starting point it propagates.
class Interrupted : public std::runtime_error {
public:
    Interrupted() : std::runtime_error("objective interrupted") {}
};

struct OptimConfig {
    int max_iterations = 20000;
    double gradient_tolerance = 1e-7;  // infinity norm
    int memory_pairs = 10;
    std::optional<double> wall_clock_budget;  // seconds

    /// Throws ParameterError for non-positive settings.
    void validate() const;
};

enum class Status { converged, max_iterations, budget_exhausted, line_search_failed };

std::string_view to_string(Status status);

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    Status status = Status::converged;
    int iterations = 0;
    int evaluations = 0;
};

/// L-BFGS with a strong-Wolfe line search (c1 = 1e-4, c2 = 0.9).
///
/// Non-finite trial values are treated as "too large" so objectives may
/// return +inf outside their domain. Returns the best iterate seen. Throws
/// ParameterError if the objective is not finite at x0.
MinimizeResult minimize(const Objective& objective, const Vector& x0, const OptimConfig& config = {});

struct BrentResult {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Brent's bounded minimization (golden section + parabolic steps). Never
/// evaluates f outside [lo, hi].
BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol);

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
double check_gradient(const Objective& objective, const Vector& x, double step = 1e-6);

}  // namespace binica::optim
