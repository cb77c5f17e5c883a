#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "scopeq/clustering.h"

namespace {

std::vector<std::vector<double>> blobs(std::size_t n, std::size_t dim, std::size_t k) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : pts[i]) v = g(rng);
    pts[i][i % k] += 10.0 / std::sqrt(2.0);
  }
  return pts;
}

void BM_SoftAssign(benchmark::State& state) {
  const auto pts = blobs(1024, 16, 10);
  scopeq::ClusterModel m;
  m.centers.assign(pts.begin(), pts.begin() + state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scopeq::soft_assign(pts[i], m));
    i = (i + 1) % pts.size();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SoftAssign)->Arg(10)->Arg(64);

void BM_KMeansFit(benchmark::State& state) {
  const auto pts = blobs(static_cast<std::size_t>(state.range(0)), 16, 10);
  scopeq::KMeansConfig cfg;
  cfg.k = 10;
  for (auto _ : state) benchmark::DoNotOptimize(scopeq::kmeans_fit(pts, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KMeansFit)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace
