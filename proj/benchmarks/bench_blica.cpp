#include <binica/blica.hpp>
#include <binica/model.hpp>

#include <benchmark/benchmark.h>

using namespace binica;

static void BM_PairwiseStats(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BicaModel m = random_model(n, 2, 40, 5);
    const PairwiseTables tables = tabulate_pairs(sample(m, 500, 6));
    for (auto _ : state) {
        benchmark::DoNotOptimize(compute_pairwise_stats(tables).degenerate_pairs);
    }
}
BENCHMARK(BM_PairwiseStats)->Arg(6)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_ScaledLoglik(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BicaModel m = random_model(n, n, 5, 7);
    const PairwiseStats stats = compute_pairwise_stats(exact_pair_tables(m));
    const MomentMatchParams p = MomentMatchParams::unflatten(
        Vector::Constant(MomentMatchParams::flat_size(n, n, 5), 0.1), n, n, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(scaled_gaussian_loglik(p, stats).value);
    }
}
BENCHMARK(BM_ScaledLoglik)->Arg(5)->Arg(10)->Arg(30)->Unit(benchmark::kMicrosecond);

static void BM_BlicaFit(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const BicaModel m = random_model(n, 2, 40, 8);
    const auto data = sample(m, 100, 9);
    BlicaConfig cfg;
    cfg.fit.restarts = 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(blica_estimate(data, 2, cfg, 10).objective);
    }
}
BENCHMARK(BM_BlicaFit)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond)->Iterations(3);
