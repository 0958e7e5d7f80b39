// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "avp/density_cluster.hpp"
#include "avp/kernels.hpp"

namespace {

using avp::kernels::PointSet;

PointSet random_points(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  PointSet p;
  p.dim = dim;
  std::vector<float> row(dim);
  for (std::size_t i = 0; i < n; ++i) {
    float norm = 0.0f;
    for (float& x : row) norm += (x = g(rng)) * x;
    for (float& x : row) x /= std::sqrt(norm);
    p.push_back(row);
  }
  return p;
}

constexpr std::size_t kDim = 128;

void BM_PairwiseSerial(benchmark::State& state) {
  const auto p = random_points(static_cast<std::size_t>(state.range(0)), kDim, 1);
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::serial::pairwise_distances(p));
}

void BM_PairwiseParallel(benchmark::State& state) {
  const auto p = random_points(static_cast<std::size_t>(state.range(0)), kDim, 1);
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::pairwise_distances(p));
}

void BM_CoreSerial(benchmark::State& state) {
  const auto d = avp::kernels::pairwise_distances(random_points(static_cast<std::size_t>(state.range(0)), kDim, 2));
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::serial::core_distances(d, 5));
}

void BM_CoreParallel(benchmark::State& state) {
  const auto d = avp::kernels::pairwise_distances(random_points(static_cast<std::size_t>(state.range(0)), kDim, 2));
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::core_distances(d, 5));
}

void BM_MstSerial(benchmark::State& state) {
  const auto d = avp::kernels::pairwise_distances(random_points(static_cast<std::size_t>(state.range(0)), kDim, 3));
  const auto core = avp::kernels::core_distances(d, 5);
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::serial::mutual_reachability_mst(d, core));
}

void BM_MstParallel(benchmark::State& state) {
  const auto d = avp::kernels::pairwise_distances(random_points(static_cast<std::size_t>(state.range(0)), kDim, 3));
  const auto core = avp::kernels::core_distances(d, 5);
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::mutual_reachability_mst(d, core));
}

void BM_CrossSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_points(n, kDim, 4), q = random_points(n, kDim, 5);
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::serial::cross_distances(q, p));
}

void BM_CrossParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_points(n, kDim, 4), q = random_points(n, kDim, 5);
  for (auto _ : state) benchmark::DoNotOptimize(avp::kernels::cross_distances(q, p));
}

void BM_MembershipLoop(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = avp::fit(random_points(n, 16, 6), {5, 0});
  const auto q = random_points(n, 16, 7);
  for (auto _ : state)
    for (std::size_t i = 0; i < q.size(); ++i) benchmark::DoNotOptimize(avp::soft_membership(model, q.row(i)));
}

void BM_MembershipBatch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto model = avp::fit(random_points(n, 16, 6), {5, 0});
  const auto q = random_points(n, 16, 7);
  for (auto _ : state) benchmark::DoNotOptimize(avp::soft_membership_batch(model, q));
}

}  // namespace

BENCHMARK(BM_PairwiseSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoreSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CoreParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MstSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MstParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossSerial)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CrossParallel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MembershipLoop)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MembershipBatch)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
