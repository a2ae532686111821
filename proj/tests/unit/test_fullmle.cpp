#include <binica/error.hpp>
#include <binica/eval.hpp>
#include <binica/fullmle.hpp>
#include <binica/model.hpp>
#include <binica/normal.hpp>
#include <binica/parallel.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace binica;

namespace {

FullMleParams params_from(const BicaModel& m) {
    FullMleParams p;
    p.mixing = m.mixing;
    p.means = m.segment_means;
    for (const auto& v : m.segment_variances) {
        p.log_variances.push_back(v.array().log().matrix());
    }
    return p;
}

AssignmentCounts exact_counts(const BicaModel& m, double total) {
    num::QmcConfig precise;
    precise.randomizations = 16;
    precise.lattice_points = 8191;
    AssignmentCounts counts;
    for (int u = 0; u < m.n_u(); ++u) {
        auto p = exact_joint_probs(m, u, precise).probabilities;
        for (double& c : p) {
            c *= total;
        }
        counts.push_back(p);
    }
    return counts;
}

}  // namespace

TEST(FullLoglik, OneDimensionalClosedForm) {
    BicaModel m;
    m.mixing = Matrix::Constant(1, 1, 0.9);
    m.segment_means = {Vector::Constant(1, -0.6)};
    m.segment_variances = {Vector::Constant(1, 2.5)};
    const QParams qp = q_params(m);
    const double p1 = num::normal_cdf(-qp.means[0][0] / std::sqrt(qp.covariances[0](0, 0)));
    const AssignmentCounts counts{{13.0, 29.0}};
    EXPECT_NEAR(full_loglik(params_from(m), counts), 29.0 * std::log(p1) + 13.0 * std::log(1.0 - p1), 1e-12);
}

TEST(FullLoglik, ProbabilitiesPartitionUnity) {
    const BicaModel m = random_model(4, 3, 1, 2);
    const FullMleConfig cfg;
    double total = 0.0;
    for (unsigned mask = 0; mask < 16; ++mask) {
        AssignmentCounts one{std::vector<double>(16, 0.0)};
        one[0][mask] = 1.0;
        total += std::exp(full_loglik(params_from(m), one, cfg.qmc));
    }
    const auto jp = joint_probs(q_params(m).means[0], q_params(m).covariances[0], cfg.qmc);
    EXPECT_NEAR(total, 1.0, 5.0 * jp.error + 1e-12);
}

TEST(FullLoglik, TrueParametersBeatPerturbations) {
    const BicaModel m = random_model(3, 3, 3, 4);
    const AssignmentCounts counts = exact_counts(m, 1e4);
    const FullMleParams p = params_from(m);
    const double best = full_loglik(p, counts);
    const Vector x = p.flatten();
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 100; ++t) {
        const Vector y = x + 0.05 * Vector::NullaryExpr(x.size(), [&] { return normal(rng); });
        EXPECT_LT(full_loglik(FullMleParams::unflatten(y, 3, 3, 3), counts), best);
    }
}

TEST(FullLoglik, ColumnPermutationAndSignInvariance) {
    const BicaModel m = random_model(4, 3, 2, 6);
    const AssignmentCounts counts = exact_counts(m, 1e5);
    const FullMleParams p = params_from(m);
    FullMleParams q = p;
    const int perm[] = {1, 2, 0};
    for (int k = 0; k < 3; ++k) {
        const double sign = k == 2 ? -1.0 : 1.0;
        q.mixing.col(k) = sign * p.mixing.col(perm[k]);
        for (int u = 0; u < 2; ++u) {
            q.means[u][k] = sign * p.means[u][perm[k]];
            q.log_variances[u][k] = p.log_variances[u][perm[k]];
        }
    }
    EXPECT_NEAR(full_loglik(p, counts), full_loglik(q, counts), 1e-8);
}

TEST(FullLoglik, DeterministicAndDimensionChecked) {
    const BicaModel m = random_model(5, 2, 2, 8);
    const AssignmentCounts counts = exact_counts(m, 100.0);
    EXPECT_EQ(full_loglik(params_from(m), counts), full_loglik(params_from(m), counts));
    const BicaModel big = random_model(11, 2, 1, 8);
    const AssignmentCounts big_counts{std::vector<double>(std::size_t{1} << 11, 1.0)};
    EXPECT_THROW(full_loglik(params_from(big), big_counts), DimensionError);
}

TEST(FullMleParams, FlattenRoundTrip) {
    const FullMleParams p = params_from(random_model(4, 2, 3, 1));
    const Vector flat = p.flatten();
    EXPECT_EQ(flat.size(), FullMleParams::flat_size(4, 2, 3));
    EXPECT_EQ(flat.size(), 8 + 6 + 6);
    const FullMleParams back = FullMleParams::unflatten(flat, 4, 2, 3);
    EXPECT_EQ(back.mixing, p.mixing);
    EXPECT_EQ(back.means[2], p.means[2]);
    EXPECT_EQ(back.log_variances[1], p.log_variances[1]);
    EXPECT_TRUE(back.to_model().segment_variances[0].isApprox(p.log_variances[0].array().exp().matrix()));
}

TEST(FullMleFit, TwoVariablesMatchDistribution) {
    const BicaModel m = random_model(2, 2, 4, 10);
    const AssignmentCounts counts = exact_counts(m, 1e6);
    FullMleConfig cfg;
    cfg.restarts = 2;
    const FitResult fit = full_mle_fit(counts, 2, 2, cfg, 11);
    EXPECT_EQ(fit.method, "fullmle");
    BicaModel fitted;
    fitted.mixing = fit.mixing;
    fitted.segment_means = fit.source_means;
    fitted.segment_variances = fit.source_variances;
    for (int u = 0; u < 4; ++u) {
        const auto p = exact_joint_probs(fitted, u).probabilities;
        double tv = 0.0;
        for (unsigned mask = 0; mask < 4; ++mask) {
            tv += 0.5 * std::abs(p[mask] - counts[u][mask] / 1e6);
        }
        EXPECT_LE(tv, 1e-3) << "segment " << u;
    }
}

TEST(FullMleFit, BeatsRandomBaseline) {
    const BicaModel m = random_model(3, 2, 8, 20);
    const auto data = sample(m, 10000, 21);
    FullMleConfig cfg;
    cfg.restarts = 1;
    cfg.optim.wall_clock_budget = 15.0;
    const FitResult fit = full_mle_fit(data, 2, cfg, 22);
    const double mcs = mean_cosine_similarity(m.mixing, fit.mixing);

    std::mt19937_64 rng(23);
    std::normal_distribution<double> normal;
    double baseline = 0.0;
    const int draws = 200;
    for (int t = 0; t < draws; ++t) {
        baseline += mean_cosine_similarity(m.mixing, Matrix::NullaryExpr(3, 2, [&] { return normal(rng); }));
    }
    baseline /= draws;
    EXPECT_GE(mcs, baseline + 0.2) << "baseline " << baseline;
}

TEST(FullMleFit, BudgetStopsWithBestIterate) {
    const BicaModel m = random_model(5, 5, 3, 30);
    const auto data = sample(m, 500, 31);
    FullMleConfig cfg;
    cfg.restarts = 1;
    cfg.optim.wall_clock_budget = 0.5;
    const FitResult fit = full_mle_fit(data, 5, cfg, 32);
    EXPECT_EQ(fit.status, optim::Status::budget_exhausted);
    EXPECT_TRUE(std::isfinite(fit.objective));
    EXPECT_EQ(fit.mixing.rows(), 5);
}

TEST(FullMleFit, RejectsLargeDimension) {
    SegmentedBinaryDataset d(12, 1);
    const std::vector<std::uint8_t> row(12, 1);
    d.add(0, row);
    EXPECT_THROW(full_mle_fit(d, 2, {}, 1), DimensionError);
}
