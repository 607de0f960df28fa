#include <benchmark/benchmark.h>

#include "retina/descriptors.hpp"
#include "retina/synthgen.hpp"

namespace {

const retina::ImageTensor& sample_image() {
  static const retina::ImageTensor img = [] {
    retina::SynthConfig cfg;
    cfg.seed = 5;
    return retina::preprocess_for_bovw(retina::synth_image(cfg, retina::ClassLabel::kExudates, 0));
  }();
  return img;
}

void BM_DetectSurf(benchmark::State& state) {
  const retina::ImageTensor g = retina::split_channels(sample_image()).g;
  for (auto _ : state) benchmark::DoNotOptimize(retina::detect_surf(g));
}
BENCHMARK(BM_DetectSurf)->Unit(benchmark::kMillisecond);

void BM_HogGrid(benchmark::State& state) {
  const retina::ImageTensor g = retina::split_channels(sample_image()).g;
  for (auto _ : state) {
    for (const auto& p : retina::extract_patch_grid(g)) benchmark::DoNotOptimize(retina::hog_patch(p));
  }
}
BENCHMARK(BM_HogGrid)->Unit(benchmark::kMicrosecond);

void BM_LbpGrid(benchmark::State& state) {
  const retina::ImageTensor g = retina::split_channels(sample_image()).g;
  for (auto _ : state) {
    for (const auto& p : retina::extract_patch_grid(g)) benchmark::DoNotOptimize(retina::lbp_patch(p));
  }
}
BENCHMARK(BM_LbpGrid)->Unit(benchmark::kMicrosecond);

void BM_ExtractAll(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(retina::extract_all(sample_image()));
}
BENCHMARK(BM_ExtractAll)->Unit(benchmark::kMillisecond);

}  // namespace
