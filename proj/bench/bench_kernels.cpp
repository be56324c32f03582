// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels on the shapes the model actually runs:
// a 64-token sequence through d=64, d_ff=256 projections and the 512-way head,
// plus a 16-sequence training batch. The forward benchmark times the default
// (OpenMP) path end to end.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lb/kernels.hpp"
#include "lb/lora.hpp"
#include "lb/transformer.hpp"
#include "lb/weights.hpp"

namespace {

using namespace lb;

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(0.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

template <void (*Gemm)(const float*, const float*, float*, int, int, int, bool)>
void BM_gemm(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0)), k = static_cast<int>(state.range(1)),
            n = static_cast<int>(state.range(2));
  const auto a = random_vec(static_cast<std::size_t>(m) * k, 1);
  const auto b = random_vec(static_cast<std::size_t>(k) * n, 2);
  std::vector<float> c(static_cast<std::size_t>(m) * n);
  for (auto _ : state) {
    Gemm(a.data(), b.data(), c.data(), m, k, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOP/s"] =
      benchmark::Counter(2.0 * m * k * n, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

void shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 64, 64})->Args({64, 64, 256})->Args({64, 256, 64})->Args({64, 64, 512})->Args({1024, 64, 256});
}

BENCHMARK(BM_gemm<kernels::serial::gemm<float>>)->Name("gemm/serial")->Apply(shapes);
BENCHMARK(BM_gemm<kernels::omp::gemm<float>>)->Name("gemm/omp")->Apply(shapes);
BENCHMARK(BM_gemm<kernels::serial::gemm_nt<float>>)->Name("gemm_nt/serial")->Apply(shapes);
BENCHMARK(BM_gemm<kernels::omp::gemm_nt<float>>)->Name("gemm_nt/omp")->Apply(shapes);
BENCHMARK(BM_gemm<kernels::serial::gemm_tn<float>>)->Name("gemm_tn/serial")->Apply(shapes);
BENCHMARK(BM_gemm<kernels::omp::gemm_tn<float>>)->Name("gemm_tn/omp")->Apply(shapes);

void BM_forward(benchmark::State& state) {
  ModelConfig cfg;  // 12 layers, d=64
  const BaseWeights base = init_base_weights(cfg, 7);
  LoraSet set = init_adapters(cfg, {Proj::q, Proj::v}, 8, 16.0f, 8);
  const LayerMask mask = mask_all(cfg.n_layers, true);
  std::vector<int> tokens(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < tokens.size(); ++i) tokens[i] = 4 + static_cast<int>(i * 37 % 500);
  for (auto _ : state) {
    auto trace = forward_collect(base, set, mask, tokens);
    benchmark::DoNotOptimize(trace);
  }
  state.counters["threads"] = kernels::max_threads();
}
BENCHMARK(BM_forward)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
