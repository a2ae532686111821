#include "binica/fullmle.hpp"

#include "binica/blica.hpp"
#include "binica/error.hpp"
#include "binica/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

namespace binica {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kMinProb = 1e-300;

void check_counts(const AssignmentCounts& counts, int n) {
    if (n < 1 || n > kMaxFullMleDimension) {
        throw DimensionError("full MLE: n = " + std::to_string(n) + " outside [1, " +
                             std::to_string(kMaxFullMleDimension) + "]");
    }
    if (counts.empty()) {
        throw DataError("full MLE: no segments");
    }
    for (std::size_t u = 0; u < counts.size(); ++u) {
        if (counts[u].size() != (std::size_t{1} << n)) {
            throw DimensionError("full MLE: segment " + std::to_string(u + 1) + " needs 2^n counts");
        }
        double total = 0.0;
        for (const double c : counts[u]) {
            if (!(c >= 0.0)) {
                throw DataError("full MLE: counts must be nonnegative");
            }
            total += c;
        }
        if (!(total > 0.0)) {
            throw DataError("full MLE: segment " + std::to_string(u + 1) + " has no observations");
        }
    }
}

FullMleParams random_start(int n, int n_z, int n_u, Seed seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> small(0.0, 0.1);
    FullMleParams p;
    p.mixing.resize(n, n_z);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            p.mixing(i, k) = unit(rng);
        }
    }
    for (int u = 0; u < n_u; ++u) {
        Vector mu(n_z);
        Vector lv(n_z);
        for (int k = 0; k < n_z; ++k) {
            mu[k] = small(rng);
        }
        for (int k = 0; k < n_z; ++k) {
            lv[k] = small(rng);
        }
        p.means.push_back(std::move(mu));
        p.log_variances.push_back(std::move(lv));
    }
    return p;
}

void normalize_columns(FullMleParams& p) {
    for (Eigen::Index k = 0; k < p.mixing.cols(); ++k) {
        const double norm = p.mixing.col(k).norm();
        if (norm > 0.0 && std::isfinite(norm)) {
            p.mixing.col(k) /= norm;
            for (std::size_t u = 0; u < p.means.size(); ++u) {
                p.means[u][k] *= norm;
                p.log_variances[u][k] += 2.0 * std::log(norm);
            }
        }
    }
}

}  // namespace

Eigen::Index FullMleParams::flat_size(int n, int n_z, int n_u) {
    return static_cast<Eigen::Index>(n) * n_z + 2 * static_cast<Eigen::Index>(n_u) * n_z;
}

Vector FullMleParams::flatten() const {
    const int n = static_cast<int>(mixing.rows());
    const int n_z = static_cast<int>(mixing.cols());
    Vector flat(flat_size(n, n_z, static_cast<int>(means.size())));
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            flat[pos++] = mixing(i, k);
        }
    }
    for (const auto& mu : means) {
        flat.segment(pos, n_z) = mu;
        pos += n_z;
    }
    for (const auto& lv : log_variances) {
        flat.segment(pos, n_z) = lv;
        pos += n_z;
    }
    return flat;
}

FullMleParams FullMleParams::unflatten(const Vector& flat, int n, int n_z, int n_u) {
    if (flat.size() != flat_size(n, n_z, n_u)) {
        throw DimensionError("FullMleParams::unflatten: wrong vector length");
    }
    FullMleParams p;
    p.mixing.resize(n, n_z);
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            p.mixing(i, k) = flat[pos++];
        }
    }
    for (int u = 0; u < n_u; ++u) {
        p.means.emplace_back(flat.segment(pos, n_z));
        pos += n_z;
    }
    for (int u = 0; u < n_u; ++u) {
        p.log_variances.emplace_back(flat.segment(pos, n_z));
        pos += n_z;
    }
    return p;
}

BicaModel FullMleParams::to_model() const {
    BicaModel m;
    m.mixing = mixing;
    m.segment_means = means;
    for (const auto& lv : log_variances) {
        m.segment_variances.emplace_back(lv.array().exp().matrix());
    }
    return m;
}

namespace {

constexpr int kAllSegments = -1;

// Log-likelihood of each segment; `only` restricts the work to one segment
// (the others are left at 0).
std::vector<double> segment_logliks(const FullMleParams& params, const AssignmentCounts& counts,
                                    const num::QmcConfig& qmc, int only = kAllSegments) {
    const int n = static_cast<int>(params.mixing.rows());
    const std::size_t cells = std::size_t{1} << n;
    const std::size_t n_u = counts.size();
    const std::size_t first = only == kAllSegments ? 0 : static_cast<std::size_t>(only);
    const std::size_t count = only == kAllSegments ? n_u : 1;

    std::vector<num::GaussianParams> gps(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t u = first + k;
        const Vector variances = params.log_variances[u].array().exp().matrix();
        gps[k].mean = -std::sqrt(kLinkScaleSquared) * (params.mixing * params.means[u]);
        gps[k].covariance = Matrix::Identity(n, n) + kLinkScaleSquared * params.mixing * variances.asDiagonal() *
                                                         params.mixing.transpose();
    }
    std::vector<double> terms(count * cells, 0.0);
    parallel_for(count * cells, [&](std::size_t task) {
        const std::size_t k = task / cells;
        const auto mask = static_cast<unsigned>(task % cells);
        const double c = counts[first + k][mask];
        if (c == 0.0) {
            return;
        }
        const double p = num::mvn_rectangle_prob(assignment_bounds(mask, n), gps[k], qmc).probability;
        terms[task] = c * std::log(std::max(p, kMinProb));
    });
    std::vector<double> out(n_u, 0.0);
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t m = 0; m < cells; ++m) {
            out[first + k] += terms[k * cells + m];
        }
    }
    return out;
}

}  // namespace

double full_loglik(const FullMleParams& params, const AssignmentCounts& counts, const num::QmcConfig& qmc) {
    const int n = static_cast<int>(params.mixing.rows());
    check_counts(counts, n);
    if (params.means.size() != counts.size() || params.log_variances.size() != counts.size()) {
        throw DimensionError("full_loglik: parameter and count segments differ");
    }
    double total = 0.0;
    for (const double v : segment_logliks(params, counts, qmc)) {
        total += v;
    }
    return total;
}

FitResult full_mle_fit(const AssignmentCounts& counts, int n, int n_z, const FullMleConfig& config, Seed seed) {
    check_counts(counts, n);
    if (n_z < 1 || n_z > n) {
        throw DimensionError("full_mle_fit: need 1 <= n_z <= n");
    }
    if (config.restarts < 1 || !(config.fd_step > 0.0)) {
        throw ParameterError("full_mle_fit: restarts and fd_step must be positive");
    }
    config.optim.validate();
    const auto start = Clock::now();
    const int n_u = static_cast<int>(counts.size());
    double total_count = 0.0;
    for (const auto& seg : counts) {
        for (const double c : seg) {
            total_count += c;
        }
    }

    // Segment-specific parameters only move their own segment's term, so
    // their difference quotients only re-evaluate that segment.
    const Eigen::Index mixing_size = static_cast<Eigen::Index>(n) * n_z;
    const auto segment_of = [&](Eigen::Index i) {
        if (i < mixing_size) {
            return kAllSegments;
        }
        const Eigen::Index local = (i - mixing_size) % (static_cast<Eigen::Index>(n_u) * n_z);
        return static_cast<int>(local / n_z);
    };
    const auto values_at = [&](const Vector& x, int only) {
        try {
            return segment_logliks(FullMleParams::unflatten(x, n, n_z, n_u), counts, config.qmc, only);
        } catch (const FactorizationError&) {
            return std::vector<double>(static_cast<std::size_t>(n_u), -std::numeric_limits<double>::infinity());
        }
    };
    const auto sum = [](const std::vector<double>& v) {
        double t = 0.0;
        for (const double x : v) {
            t += x;
        }
        return t;
    };

    // The optimizer only checks its budget between iterations, and one
    // finite-difference gradient can take seconds, so check inside as well.
    // The first evaluation of a restart always completes so there is an
    // iterate to return.
    std::optional<Clock::time_point> deadline;
    bool evaluated = false;
    const optim::Objective objective = [&](const Vector& x) {
        optim::ObjectiveEval e;
        e.value = -sum(values_at(x, kAllSegments)) / total_count;
        e.gradient = Vector::Zero(x.size());
        if (!std::isfinite(e.value)) {
            e.value = std::numeric_limits<double>::infinity();
            return e;
        }
        Vector probe = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            if (evaluated && deadline && Clock::now() >= *deadline) {
                throw optim::Interrupted();
            }
            const int only = segment_of(i);
            probe[i] = x[i] + config.fd_step;
            const double up = sum(values_at(probe, only));
            probe[i] = x[i] - config.fd_step;
            const double down = sum(values_at(probe, only));
            probe[i] = x[i];
            e.gradient[i] = -(up - down) / (2.0 * config.fd_step * total_count);
        }
        evaluated = true;
        return e;
    };

    const auto restarts = static_cast<std::size_t>(config.restarts);
    std::vector<RestartRecord> records(restarts);
    std::vector<FullMleParams> solutions(restarts);
    for (std::size_t r = 0; r < restarts; ++r) {
        const auto restart_start = Clock::now();
        RestartRecord& rec = records[r];
        rec.seed = derive_seed(seed, 0x666d6c65, r);
        evaluated = false;
        if (config.optim.wall_clock_budget) {
            deadline = restart_start + std::chrono::duration_cast<Clock::duration>(
                                           std::chrono::duration<double>(*config.optim.wall_clock_budget));
        }
        try {
            const Vector x0 = random_start(n, n_z, n_u, rec.seed).flatten();
            const optim::MinimizeResult res = optim::minimize(objective, x0, config.optim);
            FullMleParams p = FullMleParams::unflatten(res.x, n, n_z, n_u);
            normalize_columns(p);
            rec.objective = full_loglik(p, counts, config.qmc);
            rec.status = res.status;
            rec.iterations = res.iterations;
            solutions[r] = std::move(p);
        } catch (const std::exception& ex) {
            rec.failed = true;
            rec.error = ex.what();
        }
        rec.seconds = std::chrono::duration<double>(Clock::now() - restart_start).count();
    }

    int best = -1;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (!records[r].failed && (best < 0 || records[r].objective > records[static_cast<std::size_t>(best)].objective)) {
            best = static_cast<int>(r);
        }
    }
    if (best < 0) {
        throw FactorizationError("full_mle_fit: every restart failed (" + records.front().error + ")");
    }
    const FullMleParams& p = solutions[static_cast<std::size_t>(best)];
    FitResult fit;
    fit.method = "fullmle";
    fit.mixing = p.mixing;
    fit.source_means = p.means;
    for (const auto& lv : p.log_variances) {
        fit.source_variances.emplace_back(lv.array().exp().matrix());
    }
    fit.objective = records[static_cast<std::size_t>(best)].objective;
    fit.status = records[static_cast<std::size_t>(best)].status;
    fit.restarts = std::move(records);
    fit.best_restart = best;
    fit.likely_non_identifiable = likely_non_identifiable(n, n_z, n_u);
    fit.timings.optimize_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    fit.timings.total_seconds = fit.timings.optimize_seconds;
    return fit;
}

FitResult full_mle_fit(const SegmentedBinaryDataset& data, int n_z, const FullMleConfig& config, Seed seed) {
    if (data.n() > kMaxFullMleDimension) {
        throw DimensionError("full_mle_fit: n = " + std::to_string(data.n()) + " exceeds " +
                             std::to_string(kMaxFullMleDimension));
    }
    data.require_nonempty_segments();
    return full_mle_fit(data.assignment_counts(), data.n(), n_z, config, seed);
}

}  // namespace binica
