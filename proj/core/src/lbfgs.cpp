#include "binica/error.hpp"
#include "binica/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <string>
#include <vector>

namespace binica::optim {

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;
constexpr int kMaxLineSearchEvals = 40;

using Clock = std::chrono::steady_clock;

struct Trial {
    double alpha = 0.0;
    double value = 0.0;
    double slope = 0.0;  // directional derivative
    Vector x;
    Vector gradient;
    bool finite = false;
};

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the safeguarded interval between a and b.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
    const double disc = d1 * d1 - da * db;
    double x = 0.5 * (a + b);
    if (disc >= 0.0 && std::isfinite(disc)) {
        const double d2 = std::copysign(std::sqrt(disc), b - a);
        const double denom = db - da + 2.0 * d2;
        if (denom != 0.0) {
            x = b - (b - a) * (db + d2 - d1) / denom;
        }
    }
    const double margin = 0.1 * (hi - lo);
    if (!std::isfinite(x) || x < lo + margin || x > hi - margin) {
        x = 0.5 * (a + b);
    }
    return x;
}

class LineSearch {
public:
    LineSearch(const Objective& objective, const Vector& x, double f0, const Vector& dir, double slope0)
        : objective_(objective), x_(x), f0_(f0), dir_(dir), slope0_(slope0) {}

    Trial evaluate(double alpha) {
        Trial t;
        t.alpha = alpha;
        t.x = x_ + alpha * dir_;
        ObjectiveEval e = objective_(t.x);
        ++evaluations;
        t.finite = std::isfinite(e.value) && e.gradient.allFinite();
        t.value = t.finite ? e.value : std::numeric_limits<double>::infinity();
        t.gradient = std::move(e.gradient);
        t.slope = t.finite ? t.gradient.dot(dir_) : 0.0;
        return t;
    }

    bool sufficient_decrease(const Trial& t) const {
        return t.finite && t.value <= f0_ + kC1 * t.alpha * slope0_;
    }

    bool curvature(const Trial& t) const { return std::abs(t.slope) <= -kC2 * slope0_; }

    // Strong-Wolfe search (bracketing then zoom). Returns nullopt on failure.
    std::optional<Trial> run(double alpha0) {
        Trial prev;
        prev.alpha = 0.0;
        prev.value = f0_;
        prev.slope = slope0_;
        prev.finite = true;
        double alpha = alpha0;
        for (int i = 0; i < kMaxLineSearchEvals; ++i) {
            Trial cur = evaluate(alpha);
            if (!cur.finite) {
                // Outside the objective's domain: back off toward the last good point.
                if (evaluations >= kMaxLineSearchEvals) {
                    break;
                }
                alpha = prev.alpha + 0.5 * (alpha - prev.alpha);
                if (alpha - prev.alpha < 1e-20) {
                    break;
                }
                continue;
            }
            if (!sufficient_decrease(cur) || (i > 0 && cur.value >= prev.value)) {
                return zoom(prev, cur);
            }
            if (curvature(cur)) {
                return cur;
            }
            if (cur.slope >= 0.0) {
                return zoom(cur, prev);
            }
            prev = cur;
            alpha *= 2.0;
            if (evaluations >= kMaxLineSearchEvals) {
                return prev;
            }
        }
        return best_ ? best_ : std::nullopt;
    }

    int evaluations = 0;

private:
    void remember(const Trial& t) {
        if (sufficient_decrease(t) && (!best_ || t.value < best_->value)) {
            best_ = t;
        }
    }

    std::optional<Trial> zoom(Trial lo, Trial hi) {
        while (evaluations < kMaxLineSearchEvals) {
            double alpha;
            if (hi.finite) {
                alpha = cubic_step(lo.alpha, lo.value, lo.slope, hi.alpha, hi.value, hi.slope);
            } else {
                alpha = 0.5 * (lo.alpha + hi.alpha);
            }
            if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, std::abs(lo.alpha))) {
                break;
            }
            Trial cur = evaluate(alpha);
            remember(cur);
            if (!sufficient_decrease(cur) || cur.value >= lo.value) {
                hi = std::move(cur);
            } else {
                if (curvature(cur)) {
                    return cur;
                }
                if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) {
                    hi = lo;
                }
                lo = std::move(cur);
            }
        }
        // Accept a point with sufficient decrease even if curvature failed.
        if (lo.alpha > 0.0 && lo.finite) {
            return lo;
        }
        return best_;
    }

    const Objective& objective_;
    const Vector& x_;
    double f0_;
    const Vector& dir_;
    double slope0_;
    std::optional<Trial> best_;
};

}  // namespace

void OptimConfig::validate() const {
    if (max_iterations < 0 || !(gradient_tolerance > 0.0) || memory_pairs < 1) {
        throw ParameterError("OptimConfig: max_iterations >= 0, gradient_tolerance > 0, memory_pairs >= 1");
    }
    if (wall_clock_budget && !(*wall_clock_budget > 0.0)) {
        throw ParameterError("OptimConfig: wall_clock_budget must be positive");
    }
}

std::string_view to_string(Status status) {
    switch (status) {
        case Status::converged: return "converged";
        case Status::max_iterations: return "max_iterations";
        case Status::budget_exhausted: return "budget_exhausted";
        case Status::line_search_failed: return "line_search_failed";
    }
    return "unknown";
}

MinimizeResult minimize(const Objective& objective, const Vector& x0, const OptimConfig& config) {
    config.validate();
    const auto start = Clock::now();
    const auto out_of_time = [&] {
        if (!config.wall_clock_budget) {
            return false;
        }
        const std::chrono::duration<double> elapsed = Clock::now() - start;
        return elapsed.count() >= *config.wall_clock_budget;
    };

    MinimizeResult result;
    result.x = x0;
    ObjectiveEval current = objective(x0);
    result.evaluations = 1;
    if (!std::isfinite(current.value) || current.gradient.size() != x0.size() || !current.gradient.allFinite()) {
        throw ParameterError("minimize: objective not finite at the starting point");
    }
    result.value = current.value;

    std::deque<Vector> s_hist;
    std::deque<Vector> y_hist;
    std::deque<double> rho_hist;
    Vector x = x0;
    Vector g = current.gradient;
    double f = current.value;

    try {
        while (true) {
            if (g.lpNorm<Eigen::Infinity>() <= config.gradient_tolerance) {
                result.status = Status::converged;
                break;
            }
            if (result.iterations >= config.max_iterations) {
                result.status = Status::max_iterations;
                break;
            }
            if (out_of_time()) {
                result.status = Status::budget_exhausted;
                break;
            }

            // Two-loop recursion.
            Vector dir = -g;
            const std::size_t m = s_hist.size();
            std::vector<double> alphas(m);
            for (std::size_t k = m; k-- > 0;) {
                alphas[k] = rho_hist[k] * s_hist[k].dot(dir);
                dir -= alphas[k] * y_hist[k];
            }
            if (m > 0) {
                dir *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            }
            for (std::size_t k = 0; k < m; ++k) {
                const double beta = rho_hist[k] * y_hist[k].dot(dir);
                dir += (alphas[k] - beta) * s_hist[k];
            }
            double slope = g.dot(dir);
            if (!(slope < 0.0)) {
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                dir = -g;
                slope = -g.squaredNorm();
            }
            const double alpha0 = m == 0 ? std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()) : 1.0;

            LineSearch search(objective, x, f, dir, slope);
            std::optional<Trial> step = search.run(alpha0);
            result.evaluations += search.evaluations;
            if (!step && !s_hist.empty()) {
                // Retry along steepest descent with fresh curvature information.
                s_hist.clear();
                y_hist.clear();
                rho_hist.clear();
                dir = -g;
                slope = -g.squaredNorm();
                LineSearch retry(objective, x, f, dir, slope);
                step = retry.run(std::min(1.0, 1.0 / g.lpNorm<Eigen::Infinity>()));
                result.evaluations += retry.evaluations;
            }
            if (!step) {
                result.status = Status::line_search_failed;
                break;
            }

            Vector s = step->x - x;
            Vector y = step->gradient - g;
            const double sy = s.dot(y);
            if (sy > 1e-12 * s.norm() * y.norm()) {
                s_hist.push_back(std::move(s));
                y_hist.push_back(std::move(y));
                rho_hist.push_back(1.0 / sy);
                if (static_cast<int>(s_hist.size()) > config.memory_pairs) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
            }
            const double f_prev = f;
            x = step->x;
            f = step->value;
            g = step->gradient;
            ++result.iterations;
            if (f < result.value) {
                result.value = f;
                result.x = x;
            }
            if (f_prev - f <= 1e-15 * std::max(1.0, std::abs(f)) && g.lpNorm<Eigen::Infinity>() > config.gradient_tolerance &&
                s_hist.empty()) {
                // No progress even along steepest descent.
                result.status = Status::line_search_failed;
                break;
            }
        }
    } catch (const Interrupted&) {
        result.status = Status::budget_exhausted;
    }
    return result;
}

}  // namespace binica::optim
