#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "scopeq/quality_online.h"

namespace {

// Ten minutes of soft assignments at the given frame rate.
std::vector<scopeq::TimedAssignment> stream(double hz) {
  std::mt19937_64 rng(9);
  std::gamma_distribution<double> g(1.0, 1.0);
  const auto n = static_cast<std::size_t>(600 * hz);
  std::vector<scopeq::TimedAssignment> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].timestamp_ms = static_cast<std::int64_t>(1000.0 * i / hz);
    out[i].r.resize(10);
    double z = 0;
    for (auto& v : out[i].r) z += v = g(rng);
    for (auto& v : out[i].r) v /= z;
  }
  return out;
}

void BM_ScoreOnline(benchmark::State& state) {
  const auto frames = stream(static_cast<double>(state.range(0)));
  const scopeq::QualityModel q{{0.5, -0.2, 0.1, 0.3, -0.4, 0.2, 0.0, -0.1, 0.6, -0.3}, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(scopeq::score_online(frames, q));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(frames.size()));
}
BENCHMARK(BM_ScoreOnline)->Arg(4)->Arg(30);

}  // namespace
