#include "binica/eval.hpp"

#include "binica/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace binica {

std::vector<int> hungarian_assign(const Matrix& score, bool maximize) {
    if (score.rows() != score.cols()) {
        throw DimensionError("hungarian_assign: matrix must be square");
    }
    if (!score.allFinite()) {
        throw ParameterError("hungarian_assign: entries must be finite");
    }
    const int n = static_cast<int>(score.rows());
    const Matrix cost = maximize ? Matrix(-score) : score;
    constexpr double kInf = std::numeric_limits<double>::infinity();

    // 1-based arrays; column 0 is a virtual source.
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    for (int row = 1; row <= n; ++row) {
        match[0] = row;
        int col0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(col0)] = 1;
            const int i0 = match[static_cast<std::size_t>(col0)];
            double delta = kInf;
            int col1 = 0;
            for (int j = 1; j <= n; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                if (used[sj]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
                if (cur < minv[sj]) {
                    minv[sj] = cur;
                    way[sj] = col0;
                }
                if (minv[sj] < delta) {
                    delta = minv[sj];
                    col1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                const auto sj = static_cast<std::size_t>(j);
                if (used[sj]) {
                    u[static_cast<std::size_t>(match[sj])] += delta;
                    v[sj] -= delta;
                } else {
                    minv[sj] -= delta;
                }
            }
            col0 = col1;
        } while (match[static_cast<std::size_t>(col0)] != 0);
        do {
            const int col1 = way[static_cast<std::size_t>(col0)];
            match[static_cast<std::size_t>(col0)] = match[static_cast<std::size_t>(col1)];
            col0 = col1;
        } while (col0 != 0);
    }

    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
    return assignment;
}

double mean_cosine_similarity(const Matrix& a_true, const Matrix& a_est) {
    if (a_true.rows() != a_est.rows() || a_true.cols() != a_est.cols() || a_true.cols() == 0) {
        throw DimensionError("mean_cosine_similarity: matrices must have equal, nonempty shapes");
    }
    const Vector norm_true = a_true.colwise().norm().transpose();
    const Vector norm_est = a_est.colwise().norm().transpose();
    if ((norm_true.array() == 0.0).any() || (norm_est.array() == 0.0).any()) {
        throw ParameterError("mean_cosine_similarity: zero column");
    }
    const Matrix cos = (norm_true.cwiseInverse().asDiagonal() * a_true.transpose() * a_est *
                        norm_est.cwiseInverse().asDiagonal())
                           .cwiseAbs()
                           .cwiseMin(1.0);
    const std::vector<int> assignment = hungarian_assign(cos, true);
    double total = 0.0;
    for (Eigen::Index k = 0; k < cos.rows(); ++k) {
        total += cos(k, assignment[static_cast<std::size_t>(k)]);
    }
    return total / static_cast<double>(cos.rows());
}

double log_error(double mcs) {
    const double gap = 1.0 - mcs;
    if (!(gap > 0.0)) {
        return -7.0;
    }
    return std::max(std::log10(gap), -7.0);
}

}  // namespace binica
