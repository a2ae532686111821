#include "binica/blica.hpp"
#include "binica/error.hpp"
#include "binica/linalg.hpp"
#include "binica/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace binica {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

MomentMatchParams random_start(int n, int n_z, int n_u, Seed seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> small(0.0, 0.1);
    MomentMatchParams p;
    p.mixing.resize(n, n_z);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            p.mixing(i, k) = unit(rng);
        }
    }
    for (int u = 0; u < n_u; ++u) {
        Vector lv(n_z);
        for (int k = 0; k < n_z; ++k) {
            lv[k] = small(rng);
        }
        Vector ls(n);
        for (int i = 0; i < n; ++i) {
            ls[i] = small(rng);
        }
        p.log_variances.push_back(std::move(lv));
        p.log_scales.push_back(std::move(ls));
    }
    return p;
}

// Unit-length mixing columns; the variances absorb the squared column norms.
void normalize_columns(MomentMatchParams& p) {
    for (Eigen::Index k = 0; k < p.mixing.cols(); ++k) {
        const double norm = p.mixing.col(k).norm();
        if (norm > 0.0 && std::isfinite(norm)) {
            p.mixing.col(k) /= norm;
            for (auto& lv : p.log_variances) {
                lv[k] += 2.0 * std::log(norm);
            }
        }
    }
}

}  // namespace

Eigen::Index MomentMatchParams::flat_size(int n, int n_z, int n_u) {
    return static_cast<Eigen::Index>(n) * n_z + static_cast<Eigen::Index>(n_u) * (n_z + n);
}

Vector MomentMatchParams::flatten() const {
    const int n = static_cast<int>(mixing.rows());
    const int n_z = static_cast<int>(mixing.cols());
    const int n_u = static_cast<int>(log_variances.size());
    Vector flat(flat_size(n, n_z, n_u));
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            flat[pos++] = mixing(i, k);
        }
    }
    for (const auto& lv : log_variances) {
        flat.segment(pos, n_z) = lv;
        pos += n_z;
    }
    for (const auto& ls : log_scales) {
        flat.segment(pos, n) = ls;
        pos += n;
    }
    return flat;
}

MomentMatchParams MomentMatchParams::unflatten(const Vector& flat, int n, int n_z, int n_u) {
    if (flat.size() != flat_size(n, n_z, n_u)) {
        throw DimensionError("MomentMatchParams::unflatten: wrong vector length");
    }
    MomentMatchParams p;
    p.mixing.resize(n, n_z);
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            p.mixing(i, k) = flat[pos++];
        }
    }
    for (int u = 0; u < n_u; ++u) {
        p.log_variances.emplace_back(flat.segment(pos, n_z));
        pos += n_z;
    }
    for (int u = 0; u < n_u; ++u) {
        p.log_scales.emplace_back(flat.segment(pos, n));
        pos += n;
    }
    return p;
}

optim::ObjectiveEval scaled_gaussian_loglik(const MomentMatchParams& params, const PairwiseStats& stats) {
    const int n = static_cast<int>(params.mixing.rows());
    const int n_z = static_cast<int>(params.mixing.cols());
    const int n_u = stats.n_u();
    if (stats.n() != n || static_cast<int>(params.log_variances.size()) != n_u ||
        static_cast<int>(params.log_scales.size()) != n_u) {
        throw DimensionError("scaled_gaussian_loglik: parameter and statistic shapes differ");
    }
    const Matrix& a = params.mixing;
    optim::ObjectiveEval out;
    out.gradient = Vector::Zero(MomentMatchParams::flat_size(n, n_z, n_u));
    Matrix grad_a = Matrix::Zero(n, n_z);
    const Eigen::Index var_offset = static_cast<Eigen::Index>(n) * n_z;
    const Eigen::Index scale_offset = var_offset + static_cast<Eigen::Index>(n_u) * n_z;

    for (int u = 0; u < n_u; ++u) {
        const auto su = static_cast<std::size_t>(u);
        const Vector d = params.log_variances[su].array().exp().matrix();
        const Vector q = params.log_scales[su].array().exp().matrix();
        const Matrix s = Matrix::Identity(n, n) + a * d.asDiagonal() * a.transpose();
        const Matrix sigma = q.asDiagonal() * s * q.asDiagonal();
        const auto chol = num::try_cholesky(sigma);
        if (!chol || !d.allFinite() || !q.allFinite()) {
            out.value = -std::numeric_limits<double>::infinity();
            out.gradient.setZero();
            return out;
        }
        const Matrix& l = *chol;
        const double log_det = 2.0 * l.diagonal().array().log().sum();
        const auto tri = l.triangularView<Eigen::Lower>();
        Matrix sigma_inv = tri.solve(Matrix::Identity(n, n));
        sigma_inv = tri.transpose().solve(sigma_inv);
        const Matrix& c = stats.correlations[su];
        const double weight = 0.5 * stats.counts[su];
        out.value += weight * (-log_det - (c.cwiseProduct(sigma_inv)).sum());

        const Matrix g = weight * (sigma_inv * c * sigma_inv - sigma_inv);
        const Matrix g_sigma = g * sigma;
        out.gradient.segment(scale_offset + static_cast<Eigen::Index>(u) * n, n) = 2.0 * g_sigma.diagonal();
        const Matrix h = (q * q.transpose()).cwiseProduct(g);
        const Matrix ha = h * a;
        grad_a += 2.0 * ha * d.asDiagonal();
        out.gradient.segment(var_offset + static_cast<Eigen::Index>(u) * n_z, n_z) =
            d.cwiseProduct((a.transpose() * ha).diagonal());
    }
    Eigen::Index pos = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n_z; ++k) {
            out.gradient[pos++] = grad_a(i, k);
        }
    }
    return out;
}

FitResult fit_moment_matching(const PairwiseStats& stats, int n_z, const MomentMatchConfig& config, Seed seed) {
    const int n = stats.n();
    const int n_u = stats.n_u();
    if (n < 2 || n_u < 1) {
        throw DimensionError("fit_moment_matching: need n >= 2 and n_u >= 1");
    }
    if (n_z < 1 || n_z > n) {
        throw DimensionError("fit_moment_matching: need 1 <= n_z <= n");
    }
    if (config.restarts < 1) {
        throw ParameterError("fit_moment_matching: restarts must be positive");
    }
    config.optim.validate();
    double total_count = 0.0;
    for (const double c : stats.counts) {
        if (!(c > 0.0)) {
            throw DataError("fit_moment_matching: segment counts must be positive");
        }
        total_count += c;
    }

    // Minimize the negated log-likelihood per observation.
    const optim::Objective objective = [&](const Vector& x) {
        optim::ObjectiveEval e = scaled_gaussian_loglik(MomentMatchParams::unflatten(x, n, n_z, n_u), stats);
        e.value = -e.value / total_count;
        e.gradient *= -1.0 / total_count;
        return e;
    };

    const auto restarts = static_cast<std::size_t>(config.restarts);
    std::vector<RestartRecord> records(restarts);
    std::vector<MomentMatchParams> solutions(restarts);
    parallel_for(restarts, [&](std::size_t r) {
        const auto start = Clock::now();
        RestartRecord& rec = records[r];
        rec.seed = derive_seed(seed, 0x6d6d, r);
        try {
            const Vector x0 = random_start(n, n_z, n_u, rec.seed).flatten();
            const optim::MinimizeResult res = optim::minimize(objective, x0, config.optim);
            MomentMatchParams p = MomentMatchParams::unflatten(res.x, n, n_z, n_u);
            normalize_columns(p);
            rec.objective = scaled_gaussian_loglik(p, stats).value;
            rec.status = res.status;
            rec.iterations = res.iterations;
            rec.failed = !std::isfinite(rec.objective);
            if (rec.failed) {
                rec.error = "non-finite objective at solution";
            }
            solutions[r] = std::move(p);
        } catch (const std::exception& ex) {
            rec.failed = true;
            rec.error = ex.what();
        }
        rec.seconds = seconds_since(start);
    });

    int best = -1;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (!records[r].failed && (best < 0 || records[r].objective > records[static_cast<std::size_t>(best)].objective)) {
            best = static_cast<int>(r);
        }
    }
    if (best < 0) {
        throw FactorizationError("fit_moment_matching: every restart failed (" + records.front().error + ")");
    }

    const MomentMatchParams& p = solutions[static_cast<std::size_t>(best)];
    FitResult fit;
    fit.method = "blica";
    fit.mixing = p.mixing;
    for (int u = 0; u < n_u; ++u) {
        fit.source_variances.emplace_back(p.log_variances[static_cast<std::size_t>(u)].array().exp().matrix());
        fit.scales.emplace_back(p.log_scales[static_cast<std::size_t>(u)].array().exp().matrix());
    }
    fit.objective = records[static_cast<std::size_t>(best)].objective;
    fit.status = records[static_cast<std::size_t>(best)].status;
    fit.restarts = std::move(records);
    fit.best_restart = best;
    fit.degenerate_pairs = stats.degenerate_pairs;
    fit.likely_non_identifiable = likely_non_identifiable(n, n_z, n_u);
    return fit;
}

}  // namespace binica
