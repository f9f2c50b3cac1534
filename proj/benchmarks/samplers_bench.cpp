#include <benchmark/benchmark.h>

#include "bench_clouds.hpp"
#include "cloudsample/samplers.hpp"

namespace cloudsample::bench {
namespace {

void BM_RandomSample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cloud = uniform_cloud(n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sampling::random_sample(cloud, n / 2, 7));
}
BENCHMARK(BM_RandomSample)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);

void BM_Fps(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto cloud = uniform_cloud(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sampling::fps(cloud, n / 2, 0));
}
BENCHMARK(BM_Fps)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_FpsChunked(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto chunks = static_cast<std::size_t>(state.range(1));
  const auto cloud = uniform_cloud(n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(sampling::fps_chunked(cloud, n / 2, chunks));
}
BENCHMARK(BM_FpsChunked)
    ->Args({8192, 1})
    ->Args({8192, 2})
    ->Args({8192, 4})
    ->Args({8192, 8})
    ->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cloudsample::bench

BENCHMARK_MAIN();
