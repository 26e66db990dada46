// Serial reference vs OpenMP kernels.
//   ./bench_kernels --benchmark_filter=Otimes

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gravwell/kernels.hpp"

namespace k = gravwell::kernels;

namespace {

std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

template <auto Kernel>
void BM_Otimes(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto a = uniform(n, -1, 1, 1), b = uniform(n, -1, 1, 2);
    std::vector<double> out(n);
    for (auto _ : state) {
        Kernel(a, b, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <auto Kernel>
void BM_PairContributions(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto sup = uniform(n, -1, 1, 3);
    std::vector<k::PairIndex> pairs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
    const auto align = uniform(pairs.size(), -1, 1, 4);
    std::vector<double> out(pairs.size());
    for (auto _ : state) {
        Kernel(sup, pairs, align, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pairs.size()));
}

template <auto Kernel>
void BM_CosineDistances(benchmark::State& state) {
    const auto count = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = 256;
    const auto vecs = uniform(count * dim, -1, 1, 5);
    const auto centroid = uniform(dim, -1, 1, 6);
    std::vector<double> out(count);
    for (auto _ : state) {
        Kernel(vecs, dim, centroid, 1e-6, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * count));
}

template <auto Kernel>
void BM_PullForces(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto m = uniform(n, 0.5, 2, 7), d = uniform(n, 1e-6, 2, 8);
    std::vector<double> out(n);
    for (auto _ : state) {
        Kernel(m, d, 42.0, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

} // namespace

BENCHMARK(BM_Otimes<k::serial::otimes>)->Name("Otimes/serial")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_Otimes<k::omp::otimes>)->Name("Otimes/omp")->Range(1 << 12, 1 << 22)->UseRealTime();
BENCHMARK(BM_PairContributions<k::serial::pair_contributions>)->Name("PairContributions/serial")->Range(64, 2048);
BENCHMARK(BM_PairContributions<k::omp::pair_contributions>)
    ->Name("PairContributions/omp")
    ->Range(64, 2048)
    ->UseRealTime();
BENCHMARK(BM_CosineDistances<k::serial::cosine_distances>)->Name("CosineDistances/serial")->Range(256, 1 << 16);
BENCHMARK(BM_CosineDistances<k::omp::cosine_distances>)
    ->Name("CosineDistances/omp")
    ->Range(256, 1 << 16)
    ->UseRealTime();
BENCHMARK(BM_PullForces<k::serial::pull_forces>)->Name("PullForces/serial")->Range(1 << 12, 1 << 22);
BENCHMARK(BM_PullForces<k::omp::pull_forces>)->Name("PullForces/omp")->Range(1 << 12, 1 << 22)->UseRealTime();

BENCHMARK_MAIN();
