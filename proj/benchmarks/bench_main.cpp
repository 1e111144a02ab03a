#include <benchmark/benchmark.h>

#include <random>

#include "tabaudit/coverage.hpp"
#include "tabaudit/discriminator.hpp"
#include "tabaudit/features.hpp"
#include "tabaudit/gbdt.hpp"
#include "tabaudit/generator.hpp"

using namespace tabaudit;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double shift = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(shift, 1.0);
    DenseMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            m(i, j) = z(rng);
        }
    }
    return m;
}

void BM_GbdtFit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto data = LabeledFeatureSet::stack(random_matrix(n, 70, 1, 0.2), random_matrix(n, 70, 2));
    GbdtParams params;
    params.n_trees = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_gbdt(data.x, data.y, params, 3));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n));
}
BENCHMARK(BM_GbdtFit)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Coverage(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = random_matrix(n, 70, 4);
    const auto b = random_matrix(n, 70, 5, 0.1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(coverage_pair(a, b, CoverageParams{}));
    }
}
BENCHMARK(BM_Coverage)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_FullFeatures(benchmark::State& state) {
    GenerationRequest req;
    req.n_rows = static_cast<std::size_t>(state.range(0));
    req.n_cols = 20;
    req.seed = 6;
    const auto table = generate_table(req);
    for (auto _ : state) {
        benchmark::DoNotOptimize(full_features(table));
    }
}
BENCHMARK(BM_FullFeatures)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

} // namespace
BENCHMARK_MAIN();
