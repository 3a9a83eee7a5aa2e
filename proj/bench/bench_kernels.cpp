// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "cil/kernels.hpp"
#include "cil/prng.hpp"

namespace {

using namespace cil;

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    Prng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), k = n, m = n;
    const auto x = random_vec(n * k, 1), w = random_vec(k * m, 2), b = random_vec(m, 3);
    std::vector<double> y(n * m);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::gemm(x, w, b, y, n, k, m);
        else
            kernels::serial::gemm(x, w, b, y, n, k, m);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * k * m));
}

template <bool Parallel>
void BM_gemm_tn(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), p = n / 2, q = n / 2;
    const auto a = random_vec(n * p, 4), b = random_vec(n * q, 5);
    std::vector<double> c(p * q);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::gemm_tn(a, b, c, n, p, q);
        else
            kernels::serial::gemm_tn(a, b, c, n, p, q);
        benchmark::DoNotOptimize(c.data());
    }
}

template <bool Parallel>
void BM_gemm_nt(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)), m = n / 2, k = n;
    const auto a = random_vec(n * m, 6), b = random_vec(k * m, 7);
    std::vector<double> c(n * k);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::gemm_nt(a, b, c, n, m, k);
        else
            kernels::serial::gemm_nt(a, b, c, n, m, k);
        benchmark::DoNotOptimize(c.data());
    }
}

template <bool Parallel>
void BM_squared_distances(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0)) * 64;
    const std::size_t d = 64;
    const auto a = random_vec(n * d, 8), center = random_vec(d, 9);
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel)
            kernels::squared_distances(a, center, out, n, d);
        else
            kernels::serial::squared_distances(a, center, out, n, d);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_gemm<true>)->Name("gemm/omp")->RangeMultiplier(2)->Range(64, 512)->UseRealTime();
BENCHMARK(BM_gemm_tn<false>)->Name("gemm_tn/serial")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_gemm_tn<true>)->Name("gemm_tn/omp")->RangeMultiplier(2)->Range(64, 512)->UseRealTime();
BENCHMARK(BM_gemm_nt<false>)->Name("gemm_nt/serial")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_gemm_nt<true>)->Name("gemm_nt/omp")->RangeMultiplier(2)->Range(64, 512)->UseRealTime();
BENCHMARK(BM_squared_distances<false>)->Name("squared_distances/serial")->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_squared_distances<true>)->Name("squared_distances/omp")->RangeMultiplier(4)->Range(16, 1024)->UseRealTime();

BENCHMARK_MAIN();
