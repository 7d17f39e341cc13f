// Serial reference vs OpenMP kernels, plus one biLSTM layer end to end with
// parallel dispatch off and on. nproc=1 machines will show no speed-up; the
// numbers are only meaningful with several cores.

#include <benchmark/benchmark.h>

#include <vector>

#include "sse/encoder.hpp"
#include "sse/kernels.hpp"
#include "sse/rng.hpp"

namespace {

using namespace sse;

std::vector<float> random_vec(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(uniform(rng, -1.0, 1.0));
  return v;
}

template <bool Parallel>
void BM_gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const kernels::GemmShape s{n, n, n, false, false};
  const auto a = random_vec(n * n, 1), b = random_vec(n * n, 2);
  std::vector<float> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::gemm<float>(s, a, b, c, false);
    } else {
      kernels::serial::gemm<float>(s, a, b, c, false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

// The LSTM's per-step shape: [4h x in] times a vector.
template <bool Parallel>
void BM_gemv(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 4 * h, k = 2 * h;
  const auto w = random_vec(m * k, 3), x = random_vec(k, 4);
  std::vector<float> y(m);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::gemv<float>(m, k, w, x, y, false);
    } else {
      kernels::serial::gemv<float>(m, k, w, x, y, false);
    }
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k));
}

template <bool Parallel>
void BM_ger(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 4 * h, k = 2 * h;
  const auto a = random_vec(m, 5), b = random_vec(k, 6);
  std::vector<float> w(m * k);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::omp::ger<float>(m, k, a, b, w);
    } else {
      kernels::serial::ger<float>(m, k, a, b, w);
    }
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m * k));
}

void BM_bilstm_layer(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const std::size_t in = 300, hidden = 512, n = 20;
  Rng rng(7);
  BiLSTMLayer<float> layer{LSTMDirectionParams<float>::init(in, hidden, rng),
                           LSTMDirectionParams<float>::init(in, hidden, rng)};
  Tensor<float> x({n, in}, random_vec(n * in, 8));
  kernels::set_parallel(parallel);
  for (auto _ : state) {
    auto out = run_bilstm_layer(layer, x, n);
    benchmark::DoNotOptimize(out.data().data());
  }
  kernels::set_parallel(true);
  state.SetLabel(parallel ? "omp" : "serial");
}

}  // namespace

BENCHMARK(BM_gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_gemv<false>)->Name("gemv/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_gemv<true>)->Name("gemv/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_ger<false>)->Name("ger/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_ger<true>)->Name("ger/omp")->Arg(256)->Arg(1024);
BENCHMARK(BM_bilstm_layer)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
