#include "binica/model.hpp"

#include "binica/error.hpp"
#include "binica/linalg.hpp"
#include "binica/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <utility>

namespace binica {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_segment(const BicaModel& model, int segment) {
    if (segment < 0 || segment >= model.n_u()) {
        throw ParameterError("segment index " + std::to_string(segment) + " outside [0, " +
                             std::to_string(model.n_u()) + ")");
    }
}

Matrix q_covariance(const Matrix& mixing, const Vector& variances) {
    const Eigen::Index n = mixing.rows();
    return Matrix::Identity(n, n) +
           kLinkScaleSquared * mixing * variances.asDiagonal() * mixing.transpose();
}

Vector q_mean(const Matrix& mixing, const Vector& means) {
    return -std::sqrt(kLinkScaleSquared) * (mixing * means);
}

Matrix square_inverse(const Matrix& a, const char* what) {
    Eigen::FullPivLU<Matrix> lu(a);
    if (!lu.isInvertible()) {
        throw FactorizationError(std::string(what) + ": mixing matrix is singular");
    }
    return lu.inverse();
}

Matrix correlation_of(const Matrix& cov) {
    const Vector inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

double sample_condition_quantile(int n, int n_z) {
    constexpr int kSamples = 1000;
    std::mt19937_64 rng(derive_seed(0x436f6e64ULL, static_cast<std::uint64_t>(n),
                                    static_cast<std::uint64_t>(n_z)));
    std::uniform_real_distribution<double> unif(-3.0, 3.0);
    std::vector<double> kappas;
    kappas.reserve(kSamples);
    Matrix a(n, n_z);
    for (int s = 0; s < kSamples; ++s) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                a(i, j) = unif(rng);
            }
        }
        kappas.push_back(num::condition_number(a));
    }
    std::sort(kappas.begin(), kappas.end());
    const double pos = 0.75 * (kSamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    return kappas[lo] + frac * (kappas[std::min(lo + 1, kappas.size() - 1)] - kappas[lo]);
}

}  // namespace

void BicaModel::validate() const {
    if (mixing.rows() < 1 || mixing.cols() < 1 || mixing.cols() > mixing.rows()) {
        throw DimensionError("model: mixing must be n x n_z with n >= n_z >= 1");
    }
    if (segment_means.empty() || segment_means.size() != segment_variances.size()) {
        throw DimensionError("model: need n_u >= 1 matching mean and variance vectors");
    }
    for (std::size_t u = 0; u < segment_means.size(); ++u) {
        if (segment_means[u].size() != mixing.cols() || segment_variances[u].size() != mixing.cols()) {
            throw DimensionError("model: segment " + std::to_string(u) + " has wrong source dimension");
        }
        for (Eigen::Index k = 0; k < segment_variances[u].size(); ++k) {
            if (!(segment_variances[u][k] > 0.0) || !std::isfinite(segment_variances[u][k])) {
                throw ParameterError("model: source variances must be positive");
            }
        }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(mixing);
    if (qr.rank() < mixing.cols()) {
        throw ParameterError("model: mixing columns are linearly dependent");
    }
}

QParams q_params(const BicaModel& model) {
    QParams qp;
    qp.means.reserve(static_cast<std::size_t>(model.n_u()));
    qp.covariances.reserve(static_cast<std::size_t>(model.n_u()));
    for (int u = 0; u < model.n_u(); ++u) {
        qp.means.push_back(q_mean(model.mixing, model.segment_means[static_cast<std::size_t>(u)]));
        qp.covariances.push_back(
            q_covariance(model.mixing, model.segment_variances[static_cast<std::size_t>(u)]));
    }
    return qp;
}

QParams apply_scaling(const QParams& qp, const ScalingDiagonals& scales) {
    if (scales.scales.size() != qp.means.size()) {
        throw DimensionError("apply_scaling: one scale vector per segment required");
    }
    QParams out;
    for (std::size_t u = 0; u < qp.means.size(); ++u) {
        const Vector& s = scales.scales[u];
        if (s.size() != qp.means[u].size()) {
            throw DimensionError("apply_scaling: scale vector has wrong length");
        }
        if (!(s.array() > 0.0).all()) {
            throw ParameterError("apply_scaling: scales must be positive");
        }
        out.means.push_back(s.cwiseProduct(qp.means[u]));
        out.covariances.push_back(s.asDiagonal() * qp.covariances[u] * s.asDiagonal());
    }
    return out;
}

SegmentedBinaryDataset sample(const BicaModel& model, int samples_per_segment, Seed seed) {
    model.validate();
    if (samples_per_segment < 1) {
        throw ParameterError("sample: samples_per_segment must be positive");
    }
    const int n = model.n();
    const int n_z = model.n_z();
    const double link = std::sqrt(kLinkScaleSquared);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SegmentedBinaryDataset data(n, model.n_u());
    Vector z(n_z);
    std::vector<std::uint8_t> x(static_cast<std::size_t>(n));
    for (int u = 0; u < model.n_u(); ++u) {
        const Vector& mu = model.segment_means[static_cast<std::size_t>(u)];
        const Vector sd = model.segment_variances[static_cast<std::size_t>(u)].cwiseSqrt();
        for (int s = 0; s < samples_per_segment; ++s) {
            for (int k = 0; k < n_z; ++k) {
                z[k] = mu[k] + sd[k] * normal(rng);
            }
            const Vector y = model.mixing * z;
            for (int i = 0; i < n; ++i) {
                const double q = normal(rng) - link * y[i];
                x[static_cast<std::size_t>(i)] = q < 0.0 ? 1 : 0;
            }
            data.add(u, x);
        }
    }
    return data;
}

num::Rectangle assignment_bounds(unsigned mask, int n) {
    num::Rectangle rect{Vector(n), Vector(n)};
    for (int i = 0; i < n; ++i) {
        if ((mask >> i) & 1U) {
            rect.lower[i] = -kInf;
            rect.upper[i] = 0.0;
        } else {
            rect.lower[i] = 0.0;
            rect.upper[i] = kInf;
        }
    }
    return rect;
}

JointProbabilities joint_probs(const Vector& mean, const Matrix& cov, const num::QmcConfig& config) {
    const int n = static_cast<int>(mean.size());
    if (n < 1 || n > kMaxExactJointDimension) {
        throw DimensionError("joint_probs: n = " + std::to_string(n) + " outside [1, " +
                             std::to_string(kMaxExactJointDimension) + "]");
    }
    const num::GaussianParams params{mean, cov};
    JointProbabilities out;
    out.probabilities.resize(std::size_t{1} << n);
    for (unsigned mask = 0; mask < (1U << n); ++mask) {
        const auto r = num::mvn_rectangle_prob(assignment_bounds(mask, n), params, config);
        out.probabilities[mask] = r.probability;
        out.error += r.error;
    }
    return out;
}

JointProbabilities exact_joint_probs(const BicaModel& model, int segment, const num::QmcConfig& config) {
    check_segment(model, segment);
    if (model.n() > kMaxExactJointDimension) {
        throw DimensionError("exact_joint_probs: n = " + std::to_string(model.n()) + " exceeds " +
                             std::to_string(kMaxExactJointDimension));
    }
    const auto u = static_cast<std::size_t>(segment);
    return joint_probs(q_mean(model.mixing, model.segment_means[u]),
                       q_covariance(model.mixing, model.segment_variances[u]), config);
}

PairCells pair_cell_probs(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov) {
    const double s0 = std::sqrt(cov(0, 0));
    const double s1 = std::sqrt(cov(1, 1));
    const double corr = cov(0, 1) / (s0 * s1);
    const Eigen::Vector2d standard_mean(mean[0] / s0, mean[1] / s1);
    PairCells cells{};
    for (unsigned xi = 0; xi < 2; ++xi) {
        for (unsigned xj = 0; xj < 2; ++xj) {
            // mask bit 0 is the first coordinate.
            const auto rect = assignment_bounds(xi | (xj << 1U), 2);
            cells[2 * xi + xj] = num::bvn_rectangle_prob(rect, standard_mean, corr);
        }
    }
    return cells;
}

PairCells exact_pairwise_probs(const BicaModel& model, int segment, int i, int j) {
    check_segment(model, segment);
    if (i == j || i < 0 || j < 0 || i >= model.n() || j >= model.n()) {
        throw ParameterError("exact_pairwise_probs: need distinct indices within [0, n)");
    }
    const auto u = static_cast<std::size_t>(segment);
    const Vector mean = q_mean(model.mixing, model.segment_means[u]);
    const Matrix cov = q_covariance(model.mixing, model.segment_variances[u]);
    Eigen::Matrix2d pair_cov;
    pair_cov << cov(i, i), cov(i, j), cov(j, i), cov(j, j);
    return pair_cell_probs(Eigen::Vector2d(mean[i], mean[j]), pair_cov);
}

BicaModel row_swap_equivalent(const BicaModel& model) {
    if (model.n() != 2 || model.n_z() != 2) {
        throw DimensionError("row_swap_equivalent: requires a 2x2 mixing");
    }
    BicaModel swapped = model;
    swapped.mixing.row(0) = model.mixing.row(1);
    swapped.mixing.row(1) = model.mixing.row(0);
    const Matrix swapped_inverse = square_inverse(swapped.mixing, "row_swap_equivalent");

    for (int u = 0; u < model.n_u(); ++u) {
        const auto su = static_cast<std::size_t>(u);
        const Matrix cov = q_covariance(model.mixing, model.segment_variances[su]);
        Eigen::Vector2d scale;
        scale[0] = std::sqrt(cov(1, 1) / cov(0, 0));
        scale[1] = 1.0 / scale[0];
        // sqrt(pi/8) A_hat mu_hat = Q sqrt(pi/8) A mu
        swapped.segment_means[su] =
            swapped_inverse * (scale.asDiagonal() * (model.mixing * model.segment_means[su]));
    }
    return swapped;
}

Vector adjust_means_equivalent(const BicaModel& target, const BicaModel& source, int segment) {
    check_segment(target, segment);
    check_segment(source, segment);
    if (target.n() != target.n_z() || source.n() != source.n_z() || target.n() != source.n()) {
        throw DimensionError("adjust_means_equivalent: requires square mixings of equal size");
    }
    const auto u = static_cast<std::size_t>(segment);
    const Matrix target_cov = q_covariance(target.mixing, target.segment_variances[u]);
    const Matrix source_cov = q_covariance(source.mixing, source.segment_variances[u]);
    const double mismatch = (correlation_of(target_cov) - correlation_of(source_cov)).cwiseAbs().maxCoeff();
    if (mismatch > 1e-8) {
        throw CorrelationMismatchError("adjust_means_equivalent: q-correlations differ by " +
                                       std::to_string(mismatch));
    }
    const Vector scale = (source_cov.diagonal().array() / target_cov.diagonal().array()).sqrt().matrix();
    const Matrix source_inverse = square_inverse(source.mixing, "adjust_means_equivalent");
    return source_inverse * (scale.asDiagonal() * (target.mixing * target.segment_means[u]));
}

long heuristic_count(int n, int n_u) {
    if (n < 1 || n_u < 1) {
        throw ParameterError("heuristic_count: n and n_u must be positive");
    }
    const long nn = n;
    const long uu = n_u;
    const long statistics = uu * (nn * nn - nn) / 2 + 2 * uu * nn;
    const long unknowns = nn * nn + 3 * uu * nn;
    return statistics - unknowns;
}

double mixing_condition_threshold(int n, int n_z) {
    if (n < 20) {
        return 20.0;
    }
    static std::mutex mutex;
    static std::map<std::pair<int, int>, double> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find({n, n_z}); it != cache.end()) {
            return it->second;
        }
    }
    const double threshold = sample_condition_quantile(n, n_z);
    std::lock_guard lock(mutex);
    cache.emplace(std::make_pair(n, n_z), threshold);
    return threshold;
}

BicaModel random_model(int n, int n_z, int n_u, Seed seed) {
    if (n_z < 1 || n < n_z || n_u < 1) {
        throw ParameterError("random_model: need n >= n_z >= 1 and n_u >= 1");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mean_dist(-0.5, 0.5);
    std::uniform_real_distribution<double> sd_dist(0.5, 3.0);
    std::uniform_real_distribution<double> mixing_dist(-3.0, 3.0);

    BicaModel model;
    for (int u = 0; u < n_u; ++u) {
        Vector mu(n_z);
        Vector var(n_z);
        for (int k = 0; k < n_z; ++k) {
            mu[k] = mean_dist(rng);
        }
        for (int k = 0; k < n_z; ++k) {
            const double sd = sd_dist(rng);
            var[k] = sd * sd;
        }
        model.segment_means.push_back(std::move(mu));
        model.segment_variances.push_back(std::move(var));
    }

    const double threshold = mixing_condition_threshold(n, n_z);
    constexpr int kMaxAttempts = 10000;
    model.mixing.resize(n, n_z);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        for (Eigen::Index j = 0; j < n_z; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) {
                model.mixing(i, j) = mixing_dist(rng);
            }
        }
        if (num::condition_number(model.mixing) < threshold) {
            return model;
        }
    }
    throw ParameterError("random_model: no mixing below condition number " + std::to_string(threshold) +
                         " after " + std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace binica
