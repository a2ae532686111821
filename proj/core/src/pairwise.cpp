#include "binica/blica.hpp"
#include "binica/error.hpp"
#include "binica/linalg.hpp"
#include "binica/normal.hpp"
#include "binica/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace binica {

namespace {

constexpr double kRhoMargin = 1e-9;
constexpr double kRhoTolerance = 1e-9;
constexpr double kMinCellProb = 1e-300;

bool degenerate_margin(const PairCells& c) {
    const double total = c[0] + c[1] + c[2] + c[3];
    const double tiny = 1e-14 * total;
    return c[0] + c[1] <= tiny || c[2] + c[3] <= tiny || c[0] + c[2] <= tiny || c[1] + c[3] <= tiny;
}

}  // namespace

std::size_t PairwiseTables::pair_index(int i, int j, int n) {
    if (i > j) {
        std::swap(i, j);
    }
    const auto ii = static_cast<std::size_t>(i);
    const auto nn = static_cast<std::size_t>(n);
    return ii * nn - ii * (ii + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

PairwiseTables tabulate_pairs(const SegmentedBinaryDataset& data) {
    data.require_nonempty_segments();
    const int n = data.n();
    PairwiseTables t;
    t.n = n;
    t.n_u = data.n_u();
    t.totals.assign(static_cast<std::size_t>(t.n_u), 0.0);
    t.ones.assign(static_cast<std::size_t>(t.n_u), std::vector<double>(static_cast<std::size_t>(n), 0.0));
    t.cells.assign(static_cast<std::size_t>(t.n_u), std::vector<PairCells>(t.pair_count(), PairCells{}));
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto u = static_cast<std::size_t>(data.segment(r));
        const auto x = data.row(r);
        t.totals[u] += 1.0;
        auto& cells = t.cells[u];
        std::size_t k = 0;
        for (int i = 0; i < n; ++i) {
            const unsigned xi = x[static_cast<std::size_t>(i)];
            t.ones[u][static_cast<std::size_t>(i)] += xi;
            for (int j = i + 1; j < n; ++j, ++k) {
                cells[k][2 * xi + x[static_cast<std::size_t>(j)]] += 1.0;
            }
        }
    }
    return t;
}

PairwiseTables exact_pair_tables(const BicaModel& model) {
    model.validate();
    const int n = model.n();
    const QParams qp = q_params(model);
    PairwiseTables t;
    t.n = n;
    t.n_u = model.n_u();
    t.exact = true;
    t.totals.assign(static_cast<std::size_t>(t.n_u), 1.0);
    for (int u = 0; u < t.n_u; ++u) {
        const auto su = static_cast<std::size_t>(u);
        const Vector& mean = qp.means[su];
        const Matrix& cov = qp.covariances[su];
        std::vector<double> ones(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            ones[static_cast<std::size_t>(i)] = num::normal_cdf(-mean[i] / std::sqrt(cov(i, i)));
        }
        std::vector<PairCells> cells;
        cells.reserve(t.pair_count());
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                Eigen::Matrix2d pair_cov;
                pair_cov << cov(i, i), cov(i, j), cov(j, i), cov(j, j);
                cells.push_back(pair_cell_probs(Eigen::Vector2d(mean[i], mean[j]), pair_cov));
            }
        }
        t.ones.push_back(std::move(ones));
        t.cells.push_back(std::move(cells));
    }
    return t;
}

double clamp_marginal(double p1, double count) {
    if (!(count > 0.0)) {
        throw ParameterError("clamp_marginal: count must be positive");
    }
    const double lo = 1.0 / (2.0 * count);
    return std::clamp(p1, lo, 1.0 - lo);
}

double estimate_marginal_mean(double p1) { return -num::normal_quantile(p1); }

double pairwise_loglik(const PairCells& cells, const Eigen::Vector2d& means, double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw std::domain_error("pairwise_loglik: |rho| must be below 1");
    }
    // Cell (x_i, x_j): x = 1 means q < 0.
    const double h = -means[0];
    const double k = -means[1];
    const double p11 = num::bvn_upper(h, k, rho);            // both q >= 0 -> x = (0, 0)
    const double p00 = num::bvn_upper(-h, -k, rho);          // both q < 0 -> x = (1, 1)
    const double p_i = num::normal_ccdf(h);                  // P(q_i >= 0)
    const double p_j = num::normal_ccdf(k);
    PairCells probs{};
    probs[0] = p11;
    probs[1] = std::max(0.0, p_i - p11);  // x_i = 0, x_j = 1
    probs[2] = std::max(0.0, p_j - p11);  // x_i = 1, x_j = 0
    probs[3] = p00;
    double ll = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        if (cells[c] > 0.0) {
            if (probs[c] < kMinCellProb) {
                return -std::numeric_limits<double>::infinity();
            }
            ll += cells[c] * std::log(probs[c]);
        }
    }
    return ll;
}

CorrelationEstimate estimate_pairwise_correlation(const PairCells& cells, const Eigen::Vector2d& means) {
    for (const double c : cells) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw ParameterError("estimate_pairwise_correlation: cell weights must be finite and nonnegative");
        }
    }
    if (degenerate_margin(cells)) {
        return {0.0, true};
    }
    const auto negated = [&](double rho) { return -pairwise_loglik(cells, means, rho); };
    const auto best = optim::brent_minimize(negated, -1.0 + kRhoMargin, 1.0 - kRhoMargin, kRhoTolerance);
    return {best.x, false};
}

PairwiseStats compute_pairwise_stats(const PairwiseTables& tables, unsigned workers) {
    const int n = tables.n;
    if (n < 2 || tables.n_u < 1) {
        throw DimensionError("compute_pairwise_stats: need n >= 2 and n_u >= 1");
    }
    PairwiseStats stats;
    stats.counts = tables.totals;
    for (int u = 0; u < tables.n_u; ++u) {
        const auto su = static_cast<std::size_t>(u);
        if (!(tables.totals[su] > 0.0)) {
            throw DataError("segment " + std::to_string(u + 1) + " has no observations");
        }
        Vector mu(n);
        for (int i = 0; i < n; ++i) {
            double p = tables.ones[su][static_cast<std::size_t>(i)] / tables.totals[su];
            p = tables.exact ? std::clamp(p, 1e-300, 1.0 - 1e-16) : clamp_marginal(p, tables.totals[su]);
            mu[i] = estimate_marginal_mean(p);
        }
        stats.means.push_back(std::move(mu));
        stats.correlations.push_back(Matrix::Identity(n, n));
    }

    const std::size_t pairs = tables.pair_count();
    std::vector<std::pair<int, int>> pair_of(pairs);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            pair_of[PairwiseTables::pair_index(i, j, n)] = {i, j};
        }
    }
    std::vector<CorrelationEstimate> estimates(pairs * static_cast<std::size_t>(tables.n_u));
    parallel_for(
        estimates.size(),
        [&](std::size_t task) {
            const std::size_t u = task / pairs;
            const std::size_t k = task % pairs;
            const auto [i, j] = pair_of[k];
            const Eigen::Vector2d means(stats.means[u][i], stats.means[u][j]);
            estimates[task] = estimate_pairwise_correlation(tables.cells[u][k], means);
        },
        workers);

    for (std::size_t task = 0; task < estimates.size(); ++task) {
        const std::size_t u = task / pairs;
        const auto [i, j] = pair_of[task % pairs];
        stats.correlations[u](i, j) = estimates[task].rho;
        stats.correlations[u](j, i) = estimates[task].rho;
        stats.degenerate_pairs += estimates[task].degenerate ? 1 : 0;
    }
    return stats;
}

Matrix regularize_correlation(const Matrix& c, double r) {
    if (!(r > 1.0)) {
        throw ParameterError("regularize_correlation: r must exceed 1");
    }
    if (c.rows() != c.cols()) {
        throw DimensionError("regularize_correlation: matrix must be square");
    }
    const num::SymEigen eig = num::sym_eigen(c);
    const double l1 = eig.values[0];
    const double ln = eig.values[eig.values.size() - 1];
    const double delta = std::max(0.0, (l1 - r * ln) / (r - 1.0));
    Matrix out = (c + delta * Matrix::Identity(c.rows(), c.cols())) / (1.0 + delta);
    out.diagonal().setOnes();
    return out;
}

}  // namespace binica
