#include <vector>

#include <benchmark/benchmark.h>

#include "retina/rng.hpp"
#include "retina/svm.hpp"

namespace {

void BM_TrainBinary(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0)), dim = 200;
  retina::SplitMix64 rng(3);
  std::vector<double> x(n * dim);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 2 ? 1 : -1;
    for (std::size_t d = 0; d < dim; ++d) x[i * dim + d] = rng.uniform() + (d < 4 ? 0.3 * y[i] : 0.0);
  }
  std::vector<retina::Sample> s;
  for (std::size_t i = 0; i < n; ++i) s.emplace_back(x.data() + i * dim, dim);
  retina::SvmConfig cfg;
  cfg.kernel = state.range(1) ? retina::Kernel::rbf() : retina::Kernel::linear();
  for (auto _ : state) benchmark::DoNotOptimize(retina::train_binary(s, y, cfg));
}
BENCHMARK(BM_TrainBinary)->Args({200, 0})->Args({200, 1})->Args({800, 0})->Args({800, 1})->Unit(benchmark::kMillisecond);

}  // namespace
