#include <benchmark/benchmark.h>

#include "retina/bovw.hpp"
#include "retina/rng.hpp"

namespace {

retina::DescriptorMatrix cloud(std::size_t rows) {
  retina::SplitMix64 rng(1);
  retina::DescriptorMatrix m;
  m.data.resize(rows * m.dim);
  for (double& v : m.data) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_KmeansFit(benchmark::State& state) {
  const auto m = cloud(static_cast<std::size_t>(state.range(0)));
  retina::CodebookConfig cfg;
  cfg.words = static_cast<std::size_t>(state.range(1));
  cfg.max_iterations = 20;
  for (auto _ : state) benchmark::DoNotOptimize(retina::kmeans_fit(m, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KmeansFit)->Args({20000, 100})->Args({20000, 200})->Args({20000, 500})->Unit(benchmark::kMillisecond);

void BM_Quantize(benchmark::State& state) {
  retina::Codebook cb;
  cb.words = cloud(static_cast<std::size_t>(state.range(0))).data;
  const auto probes = cloud(1024);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(retina::quantize(probes.row(i++ % 1024), cb));
  }
}
BENCHMARK(BM_Quantize)->Arg(100)->Arg(500);

}  // namespace
