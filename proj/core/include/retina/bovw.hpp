#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/descriptors.hpp"
#include "retina/feature.hpp"

namespace retina {

// Row-major stack of fixed-dimension vectors (the k-means input).
struct DescriptorMatrix {
  std::size_t dim = kDescriptorDim;
  std::vector<double> data;

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * dim, dim}; }
  void append(std::span<const double> v);
};

DescriptorMatrix stack_descriptors(std::span<const DescriptorSet* const> sets);

struct CodebookConfig {
  std::size_t words = 200;
  int max_iterations = 100;
  double rel_tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct Codebook {
  std::size_t dim = kDescriptorDim;
  std::vector<double> words;  // size() * dim values, row-major
  double inertia = 0.0;
  // Sum of squared distances after every assignment step.
  std::vector<double> inertia_history;
  int iterations = 0;
  bool converged = false;

  std::size_t size() const { return dim == 0 ? 0 : words.size() / dim; }
  std::span<const double> word(std::size_t k) const { return {words.data() + k * dim, dim}; }
};

// k-means++ seeding followed by Lloyd iterations; stops after
// max_iterations or when total centroid movement relative to total centroid
// norm drops below rel_tolerance. Empty clusters are reseeded with the point
// farthest from its centroid. Deterministic for a fixed input order and seed.
Codebook kmeans_fit(const DescriptorMatrix& features, const CodebookConfig& cfg);

// Index of the nearest word by Euclidean distance; lowest index on ties.
std::size_t quantize(std::span<const double> d, const Codebook& cb);

// L2-normalized word-count histogram. Degenerate (all zero, flagged) when the
// set is empty or every descriptor is the zero vector.
FeatureVector encode_histogram(const DescriptorSet& ds, const Codebook& cb);

// "RCB1", u32 K, u32 dim, K*dim float32, all little-endian.
void save_codebook(const std::filesystem::path& path, const Codebook& cb);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace retina
