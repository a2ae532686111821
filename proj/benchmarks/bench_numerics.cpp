#include <binica/model.hpp>
#include <binica/mvn.hpp>
#include <binica/normal.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace binica;

static void BM_BvnUpper(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    std::uniform_real_distribution<double> r(-0.99, 0.99);
    std::vector<std::array<double, 3>> args(1024);
    for (auto& a : args) {
        a = {u(rng), u(rng), r(rng)};
    }
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& a = args[i++ & 1023U];
        benchmark::DoNotOptimize(num::bvn_upper(a[0], a[1], a[2]));
    }
}
BENCHMARK(BM_BvnUpper);

static void BM_MvnOrthant(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BicaModel m = random_model(n, n, 1, 3);
    const QParams qp = q_params(m);
    const num::GaussianParams gp{qp.means[0], qp.covariances[0]};
    const num::Rectangle rect = assignment_bounds(0b1011U & ((1U << n) - 1U), n);
    for (auto _ : state) {
        benchmark::DoNotOptimize(num::mvn_rectangle_prob(rect, gp).probability);
    }
}
BENCHMARK(BM_MvnOrthant)->Arg(3)->Arg(6)->Arg(10)->Unit(benchmark::kMicrosecond);

static void BM_ExactJoint(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BicaModel m = random_model(n, n, 1, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(exact_joint_probs(m, 0).error);
    }
}
BENCHMARK(BM_ExactJoint)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);
