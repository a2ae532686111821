#include <binica/error.hpp>
#include <binica/optim.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

using namespace binica;
using namespace binica::optim;

namespace {

ObjectiveEval quadratic(const Vector& x) {
    // f = (x0 - 1)^2 + 10 (x1 + 2)^2
    ObjectiveEval e;
    e.value = std::pow(x[0] - 1.0, 2) + 10.0 * std::pow(x[1] + 2.0, 2);
    e.gradient.resize(2);
    e.gradient << 2.0 * (x[0] - 1.0), 20.0 * (x[1] + 2.0);
    return e;
}

ObjectiveEval rosenbrock(const Vector& x) {
    ObjectiveEval e;
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    e.value = a * a + 100.0 * b * b;
    e.gradient.resize(2);
    e.gradient << -2.0 * a - 400.0 * x[0] * b, 200.0 * b;
    return e;
}

}  // namespace

TEST(Minimize, Quadratic) {
    const auto r = minimize(quadratic, Vector::Zero(2));
    EXPECT_EQ(r.status, Status::converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], -2.0, 1e-6);
    EXPECT_NEAR(r.value, 0.0, 1e-10);
}

TEST(Minimize, Rosenbrock) {
    Vector x0(2);
    x0 << -1.2, 1.0;
    const auto r = minimize(rosenbrock, x0);
    EXPECT_EQ(r.status, Status::converged);
    EXPECT_NEAR(r.x[0], 1.0, 1e-5);
    EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}

TEST(Minimize, StationaryStartStopsImmediately) {
    Vector x0(2);
    x0 << 1.0, -2.0;
    const auto r = minimize(quadratic, x0);
    EXPECT_EQ(r.status, Status::converged);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.x, x0);
}

TEST(Minimize, HighDimensionalQuadratic) {
    const int n = 50;
    Vector diag(n);
    for (int i = 0; i < n; ++i) {
        diag[i] = 1.0 + i;
    }
    const Objective f = [&](const Vector& x) {
        return ObjectiveEval{0.5 * x.dot(diag.asDiagonal() * x), diag.asDiagonal() * x};
    };
    const auto r = minimize(f, Vector::Ones(n));
    EXPECT_EQ(r.status, Status::converged);
    EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Minimize, InfiniteOutsideDomain) {
    // log barrier: f = x - log x on x > 0, minimum at 1.
    const Objective f = [](const Vector& x) {
        ObjectiveEval e;
        e.gradient.resize(1);
        if (x[0] <= 0.0) {
            e.value = std::numeric_limits<double>::infinity();
            e.gradient[0] = 0.0;
            return e;
        }
        e.value = x[0] - std::log(x[0]);
        e.gradient[0] = 1.0 - 1.0 / x[0];
        return e;
    };
    const auto r = minimize(f, Vector::Constant(1, 0.05));
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
}

TEST(Minimize, IterationCap) {
    Vector x0(2);
    x0 << -1.2, 1.0;
    OptimConfig cfg;
    cfg.max_iterations = 3;
    const auto r = minimize(rosenbrock, x0, cfg);
    EXPECT_EQ(r.status, Status::max_iterations);
    EXPECT_EQ(r.iterations, 3);
    EXPECT_LT(r.value, rosenbrock(x0).value);
}

TEST(Minimize, WallClockBudget) {
    const Objective slow = [](const Vector& x) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        return rosenbrock(x);
    };
    Vector x0(2);
    x0 << -1.2, 1.0;
    OptimConfig cfg;
    cfg.wall_clock_budget = 0.1;
    const auto start = std::chrono::steady_clock::now();
    const auto r = minimize(slow, x0, cfg);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_EQ(r.status, Status::budget_exhausted);
    EXPECT_LT(elapsed, 2.0);
    EXPECT_TRUE(std::isfinite(r.value));
}

TEST(Minimize, RejectsNonFiniteStart) {
    const Objective f = [](const Vector& x) {
        return ObjectiveEval{std::numeric_limits<double>::quiet_NaN(), Vector::Zero(x.size())};
    };
    EXPECT_THROW(minimize(f, Vector::Zero(2)), ParameterError);
}

TEST(OptimConfig, Validate) {
    OptimConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.max_iterations = -1;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = {};
    cfg.gradient_tolerance = -1.0;
    EXPECT_THROW(cfg.validate(), ParameterError);
    cfg = {};
    cfg.wall_clock_budget = 0.0;
    EXPECT_THROW(cfg.validate(), ParameterError);
}

TEST(Brent, Parabola) {
    const auto r = brent_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 1.0, 1e-10);
    EXPECT_NEAR(r.x, 0.3, 1e-8);
}

TEST(Brent, BoundaryMinimum) {
    const auto r = brent_minimize([](double x) { return x; }, 2.0, 5.0, 1e-10);
    EXPECT_NEAR(r.x, 2.0, 1e-6);
}

TEST(Brent, StaysInsideInterval) {
    double lo_seen = 1e9;
    double hi_seen = -1e9;
    const auto f = [&](double x) {
        lo_seen = std::min(lo_seen, x);
        hi_seen = std::max(hi_seen, x);
        return std::exp(x) - 2.0 * x + std::sin(x) / 4.0;
    };
    const auto r = brent_minimize(f, -0.9, 0.95, 1e-9);
    EXPECT_GE(lo_seen, -0.9);
    EXPECT_LE(hi_seen, 0.95);
    // grid oracle
    double best = 1e9;
    for (int k = 0; k <= 100000; ++k) {
        const double x = -0.9 + 1.85 * k / 100000.0;
        best = std::min(best, std::exp(x) - 2.0 * x + std::sin(x) / 4.0);
    }
    EXPECT_LE(r.value, best + 1e-9);
}

TEST(Brent, NanTreatedAsLarge) {
    const auto f = [](double x) {
        return x < -0.5 ? std::numeric_limits<double>::quiet_NaN() : (x - 0.1) * (x - 0.1);
    };
    const auto r = brent_minimize(f, -1.0, 1.0, 1e-10);
    EXPECT_NEAR(r.x, 0.1, 1e-7);
}

TEST(CheckGradient, CorrectGradientPasses) {
    Vector x(2);
    x << 0.3, -0.7;
    EXPECT_LT(check_gradient(rosenbrock, x), 1e-6);
}

TEST(CheckGradient, WrongGradientFails) {
    const Objective wrong = [](const Vector& x) {
        auto e = rosenbrock(x);
        e.gradient[1] *= 1.5;
        return e;
    };
    Vector x(2);
    x << 0.3, -0.7;
    EXPECT_GT(check_gradient(wrong, x), 1e-2);
}
