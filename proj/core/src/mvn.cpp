#include "binica/mvn.hpp"

#include "binica/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace binica::num {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<int, kMaxMvnDimension> kPrimes = {
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41,
    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};

// P(a < Z < b) for standard normal Z, using the tail that avoids cancellation.
double interval_prob(double a, double b) {
    if (a > 0.0) {
        return std::max(normal_ccdf(a) - normal_ccdf(b), 0.0);
    }
    return std::max(normal_cdf(b) - normal_cdf(a), 0.0);
}

double truncated_mean(double a, double b) {
    const double p = interval_prob(a, b);
    if (p > 1e-300) {
        const double pa = a == -kInf ? 0.0 : normal_pdf(a);
        const double pb = b == kInf ? 0.0 : normal_pdf(b);
        return (pa - pb) / p;
    }
    if (a == -kInf) {
        return b;
    }
    if (b == kInf) {
        return a;
    }
    return 0.5 * (a + b);
}

// Cholesky factor of the reordered covariance together with the matching
// reordered integration limits.
struct Prepared {
    Matrix chol;
    Vector lower;
    Vector upper;
    double first_a = 0.0;  // standardized bounds of the first variable
    double first_b = 0.0;
    double first_prob = 0.0;
    double first_base = 0.0;  // Phi(a), or 1 - Phi(a) when a > 0
};

Prepared prepare(const Vector& lower, const Vector& upper, const Matrix& cov, bool reorder) {
    const Eigen::Index m = cov.rows();
    Prepared out;
    Matrix c = cov;
    out.lower = lower;
    out.upper = upper;
    out.chol = Matrix::Zero(m, m);
    Vector expected = Vector::Zero(m);

    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index best = i;
        if (reorder) {
            double best_prob = kInf;
            for (Eigen::Index j = i; j < m; ++j) {
                double s2 = c(j, j);
                double shift = 0.0;
                for (Eigen::Index k = 0; k < i; ++k) {
                    s2 -= out.chol(j, k) * out.chol(j, k);
                    shift += out.chol(j, k) * expected[k];
                }
                if (!(s2 > 0.0)) {
                    continue;
                }
                const double s = std::sqrt(s2);
                const double p = interval_prob((out.lower[j] - shift) / s, (out.upper[j] - shift) / s);
                if (p < best_prob) {
                    best_prob = p;
                    best = j;
                }
            }
        }
        if (best != i) {
            c.row(i).swap(c.row(best));
            c.col(i).swap(c.col(best));
            std::swap(out.lower[i], out.lower[best]);
            std::swap(out.upper[i], out.upper[best]);
            out.chol.row(i).head(i).swap(out.chol.row(best).head(i));
        }

        double s2 = c(i, i);
        for (Eigen::Index k = 0; k < i; ++k) {
            s2 -= out.chol(i, k) * out.chol(i, k);
        }
        if (!(s2 > 0.0) || !std::isfinite(s2)) {
            throw FactorizationError("mvn_rectangle_prob: covariance is not positive definite");
        }
        const double lii = std::sqrt(s2);
        out.chol(i, i) = lii;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            double s = c(j, i);
            for (Eigen::Index k = 0; k < i; ++k) {
                s -= out.chol(j, k) * out.chol(i, k);
            }
            out.chol(j, i) = s / lii;
        }
        double shift = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) {
            shift += out.chol(i, k) * expected[k];
        }
        expected[i] = truncated_mean((out.lower[i] - shift) / lii, (out.upper[i] - shift) / lii);
    }
    out.first_a = out.lower[0] / out.chol(0, 0);
    out.first_b = out.upper[0] / out.chol(0, 0);
    out.first_prob = interval_prob(out.first_a, out.first_b);
    out.first_base = out.first_a > 0.0 ? normal_ccdf(out.first_a) : normal_cdf(out.first_a);
    return out;
}

// Separation-of-variables integrand at a point of the unit cube [0,1)^(m-1).
double integrand(const Prepared& prep, const double* w, double* z) {
    const Eigen::Index m = prep.chol.rows();
    double product = prep.first_prob;
    if (product <= 0.0) {
        return 0.0;
    }
    // Sample inside (a, b) through whichever tail is better conditioned.
    const auto draw = [](double a, double base, double e, double u) {
        if (a > 0.0) {
            return -normal_quantile_as241(std::clamp(base - u * e, 1e-300, 1.0 - 1e-16));
        }
        return normal_quantile_as241(std::clamp(base + u * e, 1e-300, 1.0 - 1e-16));
    };
    z[0] = draw(prep.first_a, prep.first_base, prep.first_prob, w[0]);
    for (Eigen::Index i = 1; i < m; ++i) {
        double shift = 0.0;
        for (Eigen::Index k = 0; k < i; ++k) {
            shift += prep.chol(i, k) * z[k];
        }
        const double lii = prep.chol(i, i);
        const double a = (prep.lower[i] - shift) / lii;
        const double b = (prep.upper[i] - shift) / lii;
        const double e = interval_prob(a, b);
        product *= e;
        if (product <= 0.0) {
            return 0.0;
        }
        if (i + 1 < m) {
            z[i] = draw(a, a > 0.0 ? normal_ccdf(a) : normal_cdf(a), e, w[i]);
        }
    }
    return product;
}

}  // namespace

RectangleProb mvn_rectangle_prob(const Rectangle& rect, const GaussianParams& params,
                                 const QmcConfig& config) {
    rect.validate();
    const Eigen::Index m = rect.dim();
    if (m < 1 || m > kMaxMvnDimension) {
        throw DimensionError("mvn_rectangle_prob: dimension " + std::to_string(m) +
                             " outside [1, " + std::to_string(kMaxMvnDimension) + "]");
    }
    if (params.mean.size() != m || params.covariance.rows() != m || params.covariance.cols() != m) {
        throw DimensionError("mvn_rectangle_prob: parameter shapes do not match the rectangle");
    }
    if (config.randomizations < 2 || config.lattice_points < 1) {
        throw ParameterError("mvn_rectangle_prob: need >= 2 randomizations and >= 1 point");
    }

    const Vector lower = rect.lower - params.mean;
    const Vector upper = rect.upper - params.mean;

    if (m == 1) {
        const double var = params.covariance(0, 0);
        if (!(var > 0.0)) {
            throw FactorizationError("mvn_rectangle_prob: variance must be positive");
        }
        const double s = std::sqrt(var);
        return {interval_prob(lower[0] / s, upper[0] / s), 0.0};
    }
    if (m == 2) {
        const double v0 = params.covariance(0, 0);
        const double v1 = params.covariance(1, 1);
        const double c01 = params.covariance(0, 1);
        if (!(v0 > 0.0 && v1 > 0.0) || !(v0 * v1 - c01 * c01 > 0.0)) {
            throw FactorizationError("mvn_rectangle_prob: covariance is not positive definite");
        }
        const double s0 = std::sqrt(v0);
        const double s1 = std::sqrt(v1);
        Rectangle standard{Vector(2), Vector(2)};
        standard.lower << lower[0] / s0, lower[1] / s1;
        standard.upper << upper[0] / s0, upper[1] / s1;
        return {bvn_rectangle_prob(standard, Eigen::Vector2d::Zero(), c01 / (s0 * s1)), 0.0};
    }

    const Prepared prep = prepare(lower, upper, params.covariance, config.reorder);
    const int dims = static_cast<int>(m) - 1;
    std::vector<double> generator(dims);
    for (int d = 0; d < dims; ++d) {
        generator[d] = std::sqrt(static_cast<double>(kPrimes[d]));
    }

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> shift(dims);
    std::vector<double> w(dims);
    std::vector<double> w_anti(dims);
    std::vector<double> z(m);

    double mean = 0.0;
    double m2 = 0.0;
    for (int r = 0; r < config.randomizations; ++r) {
        for (double& s : shift) {
            s = unif(rng);
        }
        double sum = 0.0;
        for (int j = 1; j <= config.lattice_points; ++j) {
            for (int d = 0; d < dims; ++d) {
                double x = j * generator[d] + shift[d];
                x -= std::floor(x);
                w[d] = std::abs(2.0 * x - 1.0);
                w_anti[d] = 1.0 - w[d];
            }
            sum += 0.5 * (integrand(prep, w.data(), z.data()) + integrand(prep, w_anti.data(), z.data()));
        }
        const double estimate = sum / config.lattice_points;
        const double delta = estimate - mean;
        mean += delta / (r + 1);
        m2 += delta * (estimate - mean);
    }
    const double k = config.randomizations;
    const double error = std::sqrt(m2 / (k - 1.0) / k);
    return {std::clamp(mean, 0.0, 1.0), error};
}

}  // namespace binica::num
