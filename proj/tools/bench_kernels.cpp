// Parallel vs serial kernels on shapes that dominate the default model.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ram/kernels.hpp"

namespace {

using ram::kernels::ConvGeometry;

std::vector<float> filled(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> d(-1.f, 1.f);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

ConvGeometry geometry(const benchmark::State& state) {
    ConvGeometry g;
    g.c_in = g.c_out = static_cast<std::size_t>(state.range(0));
    g.h = g.w = static_cast<std::size_t>(state.range(1));
    g.k = static_cast<std::size_t>(state.range(2));
    g.pad = g.k / 2;
    g.groups = state.range(3) ? g.c_in : 1;
    return g;
}

template <bool Parallel>
void conv_forward(benchmark::State& state) {
    const ConvGeometry g = geometry(state);
    const auto x = filled(g.n * g.c_in * g.h * g.w, 1);
    const auto w = filled(g.c_out * g.cin_per_group() * g.k * g.k, 2);
    const auto b = filled(g.c_out, 3);
    std::vector<float> y(g.n * g.c_out * g.h_out() * g.w_out());
    for (auto _ : state) {
        if constexpr (Parallel)
            ram::kernels::conv2d_forward(g, x.data(), w.data(), b.data(), y.data());
        else
            ram::kernels::reference::conv2d_forward(g, x.data(), w.data(), b.data(), y.data());
        benchmark::DoNotOptimize(y.data());
    }
    const double macs = double(y.size()) * double(g.cin_per_group() * g.k * g.k);
    state.counters["GFLOP/s"] = benchmark::Counter(2 * macs, benchmark::Counter::kIsIterationInvariantRate,
                                                   benchmark::Counter::kIs1000);
}

template <bool Parallel>
void batched_matmul(benchmark::State& state) {
    // Channel attention: per head, (C_h x HW) times its transpose.
    const std::size_t batch = 8, m = static_cast<std::size_t>(state.range(0)), k = static_cast<std::size_t>(state.range(1));
    const auto a = filled(batch * m * k, 4), b = filled(batch * m * k, 5);
    std::vector<float> c(batch * m * m);
    for (auto _ : state) {
        if constexpr (Parallel)
            ram::kernels::matmul(batch, m, k, m, a.data(), false, b.data(), true, c.data());
        else
            ram::kernels::reference::matmul(batch, m, k, m, a.data(), false, b.data(), true, c.data());
        benchmark::DoNotOptimize(c.data());
    }
    state.counters["GFLOP/s"] = benchmark::Counter(2.0 * double(batch * m * m * k),
                                                   benchmark::Counter::kIsIterationInvariantRate,
                                                   benchmark::Counter::kIs1000);
}

// {channels, extent, kernel, depthwise}
void conv_shapes(benchmark::internal::Benchmark* b) {
    b->Args({32, 112, 1, 0})->Args({96, 112, 3, 1})->Args({64, 56, 1, 0})->Args({256, 28, 3, 1});
}

}  // namespace

BENCHMARK(conv_forward<true>)->Name("conv_forward/omp")->Apply(conv_shapes)->Unit(benchmark::kMillisecond);
BENCHMARK(conv_forward<false>)->Name("conv_forward/reference")->Apply(conv_shapes)->Unit(benchmark::kMillisecond);
BENCHMARK(batched_matmul<true>)->Name("matmul/omp")->Args({16, 3136})->Args({32, 784})->Unit(benchmark::kMillisecond);
BENCHMARK(batched_matmul<false>)->Name("matmul/reference")->Args({16, 3136})->Args({32, 784})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
