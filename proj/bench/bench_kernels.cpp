// Serial reference vs OpenMP kernels at the sizes one training epoch uses
// (2000 nodes, 64 hidden, ~10 neighbors per node).

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fgc/kernels.hpp"

namespace {

using namespace fgc::kernels;

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

struct SegmentData {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> indices;
  Segments view() const { return {offsets, indices}; }
};

SegmentData random_segments(std::size_t n, std::size_t mean_degree, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> node(0, static_cast<std::uint32_t>(n - 1));
  std::uniform_int_distribution<std::size_t> degree(0, 2 * mean_degree);
  SegmentData s;
  s.offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t d = degree(rng);
    for (std::size_t k = 0; k < d; ++k) s.indices.push_back(node(rng));
    s.offsets.push_back(s.indices.size());
  }
  return s;
}

template <auto Gemm>
void BM_gemm_nt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t k = 64, m = 64;
  const auto a = random_values(n * k, 1), b = random_values(m * k, 2);
  std::vector<double> c(n * m);
  for (auto _ : state) {
    Gemm(a, b, c, n, k, m);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * k * m));
}

template <auto Gemm>
void BM_gemm_tn(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const std::size_t n = 64, m = 64;
  const auto a = random_values(k * n, 3), b = random_values(k * m, 4);
  std::vector<double> c(n * m);
  for (auto _ : state) {
    Gemm(a, b, c, k, n, m);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * k * m));
}

template <auto Mean>
void BM_segment_mean(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 64;
  const auto seg = random_segments(n, 10, 5);
  const auto h = random_values(n * cols, 6);
  std::vector<double> out(n * cols);
  for (auto _ : state) {
    Mean(h, cols, seg.view(), out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * seg.indices.size() * cols));
}

template <auto Backward>
void BM_segment_mean_backward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 64;
  const auto seg = random_segments(n, 10, 7);
  const auto g = random_values(n * cols, 8);
  std::vector<double> grad_h(n * cols);
  for (auto _ : state) {
    Backward(g, cols, seg.view(), grad_h);
    benchmark::DoNotOptimize(grad_h.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * seg.indices.size() * cols));
}

BENCHMARK(BM_gemm_nt<serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(500)->Arg(2000)->Arg(8000);
BENCHMARK(BM_gemm_nt<parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(500)->Arg(2000)->Arg(8000);
BENCHMARK(BM_gemm_tn<serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(2000)->Arg(8000);
BENCHMARK(BM_gemm_tn<parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(2000)->Arg(8000);
BENCHMARK(BM_segment_mean<serial::segment_mean>)->Name("segment_mean/serial")->Arg(2000)->Arg(20000);
BENCHMARK(BM_segment_mean<parallel::segment_mean>)->Name("segment_mean/parallel")->Arg(2000)->Arg(20000);
BENCHMARK(BM_segment_mean_backward<serial::segment_mean_backward>)
    ->Name("segment_mean_backward/serial")
    ->Arg(2000)
    ->Arg(20000);
BENCHMARK(BM_segment_mean_backward<parallel::segment_mean_backward>)
    ->Name("segment_mean_backward/parallel")
    ->Arg(2000)
    ->Arg(20000);

}  // namespace

BENCHMARK_MAIN();
