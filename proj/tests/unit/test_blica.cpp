#include <binica/blica.hpp>
#include <binica/error.hpp>
#include <binica/eval.hpp>
#include <binica/linalg.hpp>
#include <binica/model.hpp>
#include <binica/normal.hpp>
#include <binica/parallel.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace binica;

namespace {

// Unit-variance q statistics implied by a model, N_u = weight.
PairwiseStats implied_stats(const BicaModel& m, double weight = 1.0) {
    const QParams qp = q_params(m);
    PairwiseStats s;
    for (int u = 0; u < m.n_u(); ++u) {
        const Vector sd = qp.covariances[u].diagonal().cwiseSqrt();
        s.means.push_back(qp.means[u].cwiseQuotient(sd));
        s.correlations.push_back(oracle::to_correlation(qp.covariances[u]));
        s.counts.push_back(weight);
    }
    return s;
}

// Parameters of m with Q chosen so that diag(Sigma) = 1.
MomentMatchParams true_params(const BicaModel& m) {
    const QParams qp = q_params(m);
    MomentMatchParams p;
    p.mixing = std::sqrt(kLinkScaleSquared) * m.mixing;
    for (int u = 0; u < m.n_u(); ++u) {
        p.log_variances.push_back(m.segment_variances[u].array().log().matrix());
        p.log_scales.push_back((-0.5 * qp.covariances[u].diagonal().array().log()).matrix());
    }
    return p;
}

MomentMatchParams params_of(const FitResult& fit) {
    MomentMatchParams p;
    p.mixing = fit.mixing;
    for (std::size_t u = 0; u < fit.source_variances.size(); ++u) {
        p.log_variances.push_back(fit.source_variances[u].array().log().matrix());
        p.log_scales.push_back(fit.scales[u].array().log().matrix());
    }
    return p;
}

double direct_loglik(const PairCells& cells, double mi, double mj, double rho) {
    // Each cell as its own orthant integral; no cancellation between cells.
    const double p00 = oracle::bvn_upper_quadrature(-mi, -mj, rho);
    const double p01 = oracle::bvn_upper_quadrature(-mi, mj, -rho);
    const double p10 = oracle::bvn_upper_quadrature(mi, -mj, -rho);
    const double p11 = oracle::bvn_upper_quadrature(mi, mj, rho);
    return cells[0] * std::log(p00) + cells[1] * std::log(p01) + cells[2] * std::log(p10) +
           cells[3] * std::log(p11);
}

PairCells unit_cells(double mi, double mj, double rho) {
    Eigen::Matrix2d c;
    c << 1.0, rho, rho, 1.0;
    return pair_cell_probs(Eigen::Vector2d(mi, mj), c);
}

}  // namespace

TEST(MarginalMean, Examples) {
    EXPECT_EQ(estimate_marginal_mean(0.5), 0.0);
    EXPECT_NEAR(estimate_marginal_mean(0.975), -1.959964, 1e-5);
    for (double mu : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        EXPECT_NEAR(estimate_marginal_mean(num::normal_cdf(-mu)), mu, 1e-10);
    }
}

TEST(MarginalMean, ClampKeepsQuantileFinite) {
    EXPECT_EQ(clamp_marginal(0.0, 50), 0.01);
    EXPECT_EQ(clamp_marginal(1.0, 50), 0.99);
    EXPECT_EQ(clamp_marginal(0.3, 50), 0.3);
    EXPECT_TRUE(std::isfinite(estimate_marginal_mean(clamp_marginal(0.0, 1e6))));
}

TEST(PairwiseLoglik, IndependenceDecomposes) {
    const PairCells w{3.0, 5.0, 7.0, 11.0};
    const double mi = 0.4;
    const double mj = -0.9;
    // x = 1 iff q < 0; q = m + eps, so P(x = 1) = Phi(-m).
    const double a = num::normal_cdf(-mi);
    const double b = num::normal_cdf(-mj);
    const double expected = (w[2] + w[3]) * std::log(a) + (w[0] + w[1]) * std::log(1 - a) +
                            (w[1] + w[3]) * std::log(b) + (w[0] + w[2]) * std::log(1 - b);
    EXPECT_NEAR(pairwise_loglik(w, Eigen::Vector2d(mi, mj), 0.0), expected, 1e-12);
}

TEST(PairwiseLoglik, MatchesQuadratureOracle) {
    // The bvn kernel is accurate to ~1e-16 absolute, so cells below 1e-3 would
    // need a looser bound on log P. Those draws are skipped.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mu(-1.5, 1.5);
    std::uniform_real_distribution<double> corr(-0.9, 0.9);
    std::uniform_real_distribution<double> weight(0.0, 1.0);
    int checked = 0;
    while (checked < 100) {
        const double mi = mu(rng);
        const double mj = mu(rng);
        const double rho = corr(rng);
        const PairCells w{weight(rng), weight(rng), weight(rng), weight(rng)};
        const PairCells p = unit_cells(mi, mj, rho);
        if (*std::min_element(p.begin(), p.end()) < 1e-3) {
            continue;
        }
        ++checked;
        EXPECT_NEAR(pairwise_loglik(w, Eigen::Vector2d(mi, mj), rho), direct_loglik(w, mi, mj, rho), 1e-12);
    }
}

TEST(PairwiseLoglik, SelfConsistentMaximum) {
    const double rho_star = 0.35;
    const PairCells w = unit_cells(0.2, -0.5, rho_star);
    const Eigen::Vector2d m(0.2, -0.5);
    const double at_star = pairwise_loglik(w, m, rho_star);
    for (int k = -99; k <= 99; ++k) {
        EXPECT_LE(pairwise_loglik(w, m, k / 100.0), at_star + 1e-14);
    }
}

TEST(PairwiseLoglik, SentinelAndDomain) {
    const PairCells w{0.0, 0.0, 0.0, 1.0};
    EXPECT_EQ(pairwise_loglik(w, Eigen::Vector2d(40.0, 40.0), 0.0), -std::numeric_limits<double>::infinity());
    EXPECT_THROW(pairwise_loglik(w, Eigen::Vector2d(0, 0), 1.0), std::domain_error);
}

TEST(PairwiseCorrelation, RecoversModelCorrelation) {
    for (int t = 0; t < 10; ++t) {
        const BicaModel m = random_model(4, 3, 1, derive_seed(11, t));
        const QParams qp = q_params(m);
        const Matrix c = oracle::to_correlation(qp.covariances[0]);
        const Vector sd = qp.covariances[0].diagonal().cwiseSqrt();
        for (int i = 0; i < 4; ++i) {
            for (int j = i + 1; j < 4; ++j) {
                const auto cells = exact_pairwise_probs(m, 0, i, j);
                const auto est = estimate_pairwise_correlation(
                    cells, Eigen::Vector2d(qp.means[0][i] / sd[i], qp.means[0][j] / sd[j]));
                EXPECT_FALSE(est.degenerate);
                EXPECT_NEAR(est.rho, c(i, j), 1e-6);
            }
        }
    }
}

TEST(PairwiseCorrelation, GridRecovery) {
    // Means kept moderate: a cell of ~1e-14 leaves the likelihood flat in rho
    // at double precision.
    for (double rho : {-0.95, -0.5, 0.0, 0.5, 0.95}) {
        for (double mi : {-0.8, 0.0, 0.6}) {
            for (double mj : {-0.5, 0.7}) {
                const auto est = estimate_pairwise_correlation(unit_cells(mi, mj, rho), Eigen::Vector2d(mi, mj));
                EXPECT_NEAR(est.rho, rho, 1e-6) << mi << " " << mj;
            }
        }
    }
}

TEST(PairwiseCorrelation, ProductCellsGiveZero) {
    const double a = 0.3;
    const double b = 0.6;
    const PairCells cells{(1 - a) * (1 - b), (1 - a) * b, a * (1 - b), a * b};
    const auto est = estimate_pairwise_correlation(
        cells, Eigen::Vector2d(estimate_marginal_mean(a), estimate_marginal_mean(b)));
    EXPECT_NEAR(est.rho, 0.0, 1e-6);
}

TEST(PairwiseCorrelation, FiniteSample) {
    const double rho = 0.6;
    const Eigen::Vector2d mean(0.3, -0.2);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    const int n = 100000;
    PairCells cells{};
    double ones_i = 0;
    double ones_j = 0;
    for (int s = 0; s < n; ++s) {
        const double e1 = normal(rng);
        const double e2 = rho * e1 + std::sqrt(1 - rho * rho) * normal(rng);
        const int xi = mean[0] + e1 < 0.0;
        const int xj = mean[1] + e2 < 0.0;
        cells[2 * xi + xj] += 1.0;
        ones_i += xi;
        ones_j += xj;
    }
    const Eigen::Vector2d est_mean(estimate_marginal_mean(ones_i / n), estimate_marginal_mean(ones_j / n));
    EXPECT_NEAR(estimate_pairwise_correlation(cells, est_mean).rho, rho, 0.02);
}

TEST(PairwiseCorrelation, DegenerateMarginFlagged) {
    const PairCells cells{10.0, 5.0, 0.0, 0.0};  // x_i never 1
    const auto est = estimate_pairwise_correlation(cells, Eigen::Vector2d(3.0, 0.0));
    EXPECT_TRUE(est.degenerate);
    EXPECT_EQ(est.rho, 0.0);
}

TEST(Regularize, IdentityUnchanged) {
    const Matrix i = Matrix::Identity(4, 4);
    EXPECT_EQ(regularize_correlation(i, 5.0), i);
}

TEST(Regularize, HandExample) {
    Matrix c(2, 2);
    c << 1.0, 0.9, 0.9, 1.0;  // eigenvalues 1.9 and 0.1
    const Matrix out = regularize_correlation(c, 10.0);
    const auto eig = num::sym_eigen(out);
    EXPECT_NEAR(eig.values[0], 2.0 / 1.1, 1e-12);
    EXPECT_NEAR(eig.values[1], 0.2 / 1.1, 1e-12);
    EXPECT_NEAR(eig.values[0] / eig.values[1], 10.0, 1e-10);
}

TEST(Regularize, RandomMatricesSatisfyBounds) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + t % 9;
        Matrix c = oracle::to_correlation(oracle::random_spd(n, 1e-4, 10.0, rng));
        if (t % 3 == 0) {
            // push it off the PD cone
            c(0, 1) = c(1, 0) = (c(0, 1) >= 0 ? 1.0 : -1.0);
            if (n > 2) {
                c(0, 2) = c(2, 0) = -c(0, 1);
                c(1, 2) = c(2, 1) = c(0, 1);
            }
        }
        for (double r : {2.0, 30.0, 1000.0}) {
            const Matrix out = regularize_correlation(c, r);
            EXPECT_LE((out - out.transpose()).cwiseAbs().maxCoeff(), 1e-15);
            EXPECT_LE((out.diagonal().array() - 1.0).abs().maxCoeff(), 1e-12);
            const auto eig = num::sym_eigen(out);
            EXPECT_GT(eig.values[n - 1], 0.0);
            EXPECT_LE(eig.values[0] / eig.values[n - 1], r * (1 + 1e-6));
        }
    }
}

TEST(Regularize, RejectsBadTarget) {
    EXPECT_THROW(regularize_correlation(Matrix::Identity(2, 2), 1.0), ParameterError);
}

TEST(MomentMatchParams, FlattenRoundTrip) {
    MomentMatchParams p;
    p.mixing = Matrix::Random(4, 2);
    p.log_variances = {Vector::Random(2), Vector::Random(2), Vector::Random(2)};
    p.log_scales = {Vector::Random(4), Vector::Random(4), Vector::Random(4)};
    const Vector flat = p.flatten();
    ASSERT_EQ(flat.size(), MomentMatchParams::flat_size(4, 2, 3));
    EXPECT_EQ(flat.size(), 8 + 6 + 12);
    EXPECT_EQ(flat[1], p.mixing(0, 1));
    const auto back = MomentMatchParams::unflatten(flat, 4, 2, 3);
    EXPECT_EQ(back.mixing, p.mixing);
    EXPECT_EQ(back.log_variances[2], p.log_variances[2]);
    EXPECT_EQ(back.log_scales[1], p.log_scales[1]);
    EXPECT_THROW(MomentMatchParams::unflatten(flat.head(5), 4, 2, 3), DimensionError);
}

TEST(ScaledLoglik, StationaryAtImpliedStatistics) {
    const BicaModel m = random_model(5, 3, 4, 21);
    const auto eval = scaled_gaussian_loglik(true_params(m), implied_stats(m, 100.0));
    EXPECT_LE(eval.gradient.norm(), 1e-6 * 400.0);
    EXPECT_LE(eval.gradient.cwiseAbs().maxCoeff() / 100.0, 1e-8);
}

TEST(ScaledLoglik, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 20; ++t) {
        const BicaModel m = random_model(5, 3, 3, derive_seed(30, t));
        PairwiseStats stats = implied_stats(m, 10.0 + t);
        stats.correlations[1] = oracle::to_correlation(oracle::random_spd(5, 0.2, 3.0, rng));
        MomentMatchParams p;
        p.mixing = Matrix::NullaryExpr(5, 3, [&] { return normal(rng); });
        for (int u = 0; u < 3; ++u) {
            p.log_variances.push_back(Vector::NullaryExpr(3, [&] { return 0.3 * normal(rng); }));
            p.log_scales.push_back(Vector::NullaryExpr(5, [&] { return 0.3 * normal(rng); }));
        }
        const optim::Objective f = [&](const Vector& x) {
            return scaled_gaussian_loglik(MomentMatchParams::unflatten(x, 5, 3, 3), stats);
        };
        EXPECT_LE(optim::check_gradient(f, p.flatten()), 1e-5) << "point " << t;
    }
}

TEST(ScaledLoglik, DiagonalReduction) {
    MomentMatchParams p;
    p.mixing = Matrix::Zero(3, 2);
    p.log_variances = {Vector::Zero(2)};
    Vector q(3);
    q << 0.8, 1.3, 2.0;
    p.log_scales = {q.array().log().matrix()};
    PairwiseStats stats;
    stats.means = {Vector::Zero(3)};
    stats.correlations = {oracle::to_correlation(Matrix::Identity(3, 3) + Matrix::Constant(3, 3, 0.4))};
    stats.counts = {7.0};
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) {
        expected += -2.0 * std::log(q[i]) - stats.correlations[0](i, i) / (q[i] * q[i]);
    }
    expected *= 7.0 / 2.0;
    EXPECT_NEAR(scaled_gaussian_loglik(p, stats).value, expected, 1e-12);
}

TEST(ScaledLoglik, PermutationAndSignInvariance) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 20; ++t) {
        const BicaModel m = random_model(4, 3, 3, derive_seed(40, t));
        PairwiseStats stats = implied_stats(m, 5.0);
        stats.correlations[0] = oracle::to_correlation(oracle::random_spd(4, 0.5, 2.0, rng));
        MomentMatchParams p = true_params(m);
        p.log_scales[2][1] += 0.3;
        std::vector<int> perm{2, 0, 1};
        MomentMatchParams q = p;
        for (int k = 0; k < 3; ++k) {
            const double sign = (k == 1) ? -1.0 : 1.0;
            q.mixing.col(k) = sign * p.mixing.col(perm[k]);
            for (int u = 0; u < 3; ++u) {
                q.log_variances[u][k] = p.log_variances[u][perm[k]];
            }
        }
        EXPECT_NEAR(scaled_gaussian_loglik(p, stats).value, scaled_gaussian_loglik(q, stats).value, 1e-10);
    }
}

TEST(ScaledLoglik, TrueParametersBeatPerturbations) {
    const BicaModel m = random_model(6, 6, 4, 77);
    const PairwiseStats stats = implied_stats(m);
    const MomentMatchParams p = true_params(m);
    const Vector x = p.flatten();
    const double best = scaled_gaussian_loglik(p, stats).value;
    std::mt19937_64 rng(78);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 100; ++t) {
        const double size = 1e-3 * (1 + t % 10);
        const Vector y = x + size * Vector::NullaryExpr(x.size(), [&] { return normal(rng); });
        EXPECT_LT(scaled_gaussian_loglik(MomentMatchParams::unflatten(y, 6, 6, 4), stats).value, best);
    }
}

TEST(FitMomentMatching, IdentifiableExactModel) {
    const BicaModel m = random_model(10, 10, 3, derive_seed(7, 10, 3, 0));
    const FitResult fit = blica_estimate_exact(m, 10, {}, 5);
    EXPECT_GE(mean_cosine_similarity(m.mixing, fit.mixing), 0.9999);
    EXPECT_FALSE(fit.likely_non_identifiable);
    EXPECT_EQ(fit.restarts.size(), 3U);
    EXPECT_EQ(fit.method, "blica");
}

TEST(FitMomentMatching, ObjectiveMatchesReturnedParameters) {
    const BicaModel m = random_model(5, 3, 4, 9);
    const PairwiseStats stats = compute_pairwise_stats(exact_pair_tables(m));
    const FitResult fit = fit_moment_matching(stats, 3, {}, 2);
    EXPECT_NEAR(scaled_gaussian_loglik(params_of(fit), stats).value, fit.objective, 1e-10);
    for (int k = 0; k < 3; ++k) {
        EXPECT_NEAR(fit.mixing.col(k).norm(), 1.0, 1e-12);
    }
    const RestartRecord& best = fit.restarts[static_cast<std::size_t>(fit.best_restart)];
    for (const auto& r : fit.restarts) {
        EXPECT_LE(r.objective, best.objective + 1e-12);
    }
}

TEST(FitMomentMatching, RankOneSingleSegment) {
    BicaModel m;
    m.mixing.resize(4, 1);
    m.mixing << 1.0, -0.5, 2.0, 0.8;
    m.segment_means = {Vector::Zero(1)};
    m.segment_variances = {Vector::Constant(1, 1.5)};
    const PairwiseStats stats = implied_stats(m);
    const FitResult fit = fit_moment_matching(stats, 1, {}, 3);
    const Vector q = fit.scales[0];
    const Matrix implied = q.asDiagonal() *
                           (Matrix::Identity(4, 4) + fit.mixing * fit.source_variances[0].asDiagonal() *
                                                         fit.mixing.transpose()) *
                           q.asDiagonal();
    EXPECT_LE((oracle::to_correlation(implied) - stats.correlations[0]).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(FitMomentMatching, NonIdentifiableReachesTrueObjective) {
    const BicaModel m = random_model(4, 4, 2, 31);
    const PairwiseStats stats = implied_stats(m);
    const double truth = scaled_gaussian_loglik(true_params(m), stats).value;
    const FitResult fit = fit_moment_matching(stats, 4, {}, 4);
    EXPECT_GE(fit.objective, truth - 1e-6);
    EXPECT_TRUE(likely_non_identifiable(4, 4, 2));
}

TEST(FitMomentMatching, RejectsBadInput) {
    const PairwiseStats stats = implied_stats(random_model(3, 2, 1, 1));
    MomentMatchConfig cfg;
    cfg.restarts = 0;
    EXPECT_THROW(fit_moment_matching(stats, 2, cfg, 1), ParameterError);
    EXPECT_THROW(fit_moment_matching(stats, 4, {}, 1), DimensionError);
}

TEST(BlicaEstimate, TwoVariablesFlaggedAndTied) {
    for (int t = 0; t < 5; ++t) {
        const BicaModel m = random_model(2, 2, 4, derive_seed(50, t));
        const FitResult fit = blica_estimate_exact(m, 2, {}, 6);
        EXPECT_TRUE(fit.likely_non_identifiable);
        const PairwiseStats stats = compute_pairwise_stats(exact_pair_tables(m));
        const double truth = scaled_gaussian_loglik(true_params(m), stats).value;
        const double swapped = scaled_gaussian_loglik(true_params(row_swap_equivalent(m)), stats).value;
        EXPECT_NEAR(truth, swapped, 1e-6);
        EXPECT_NEAR(fit.objective, truth, 1e-6);
    }
}

TEST(BlicaEstimate, EmptySegmentNamed) {
    SegmentedBinaryDataset d(3, 3);
    const std::uint8_t row[] = {1, 0, 1};
    d.add(0, row);
    d.add(2, row);
    try {
        blica_estimate(d, 2, {}, 1);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("segment 2"), std::string::npos) << e.what();
    }
}

TEST(BlicaEstimate, FiniteSampleRecovery) {
    const BicaModel m = random_model(6, 2, 40, 12);
    const auto data = sample(m, 1000, 13);
    const FitResult fit = blica_estimate(data, 2, {}, 14);
    EXPECT_GE(mean_cosine_similarity(m.mixing, fit.mixing), 0.99);
    EXPECT_GT(fit.timings.pairwise_seconds, 0.0);
    EXPECT_GT(fit.timings.optimize_seconds, 0.0);
    EXPECT_GE(fit.timings.total_seconds, fit.timings.pairwise_seconds + fit.timings.optimize_seconds - 1e-9);
}

TEST(PairwiseStats, TablesAndInvariants) {
    const BicaModel m = random_model(5, 3, 3, 60);
    const auto data = sample(m, 300, 61);
    const PairwiseTables tables = tabulate_pairs(data);
    EXPECT_EQ(tables.pair_count(), 10U);
    EXPECT_EQ(PairwiseTables::pair_index(0, 1, 5), 0U);
    EXPECT_EQ(PairwiseTables::pair_index(1, 2, 5), 4U);
    EXPECT_EQ(PairwiseTables::pair_index(3, 4, 5), 9U);
    // manual count for (1, 3) in segment 2
    PairCells manual{};
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (data.segment(r) == 2) {
            manual[2 * data.value(r, 1) + data.value(r, 3)] += 1.0;
        }
    }
    for (int c = 0; c < 4; ++c) {
        EXPECT_EQ(tables.cells[2][PairwiseTables::pair_index(1, 3, 5)][c], manual[c]);
    }
    EXPECT_EQ(tables.totals[1], 300.0);

    const PairwiseStats serial = compute_pairwise_stats(tables, 1);
    const PairwiseStats threaded = compute_pairwise_stats(tables, 4);
    for (int u = 0; u < 3; ++u) {
        const Matrix& c = serial.correlations[u];
        EXPECT_EQ(c, threaded.correlations[u]);
        EXPECT_EQ(c, c.transpose());
        EXPECT_EQ(c.diagonal(), Vector::Ones(5));
        EXPECT_LE(c.cwiseAbs().maxCoeff(), 1.0);
        EXPECT_EQ(serial.counts[u], 300.0);
    }
}

TEST(LikelyNonIdentifiable, Heuristic) {
    EXPECT_TRUE(likely_non_identifiable(2, 2, 10));
    EXPECT_TRUE(likely_non_identifiable(8, 8, 2));
    EXPECT_TRUE(likely_non_identifiable(5, 5, 4));
    EXPECT_FALSE(likely_non_identifiable(5, 5, 5));
    EXPECT_FALSE(likely_non_identifiable(10, 10, 3));
    EXPECT_FALSE(likely_non_identifiable(6, 2, 40));
}
