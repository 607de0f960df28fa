#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "retina/dataset.hpp"
#include "retina/image.hpp"

namespace retina {

struct IntRange {
  int lo = 0;
  int hi = 0;
};

struct SynthConfig {
  int per_class = 10;
  int size = 224;
  std::uint64_t seed = 0;

  IntRange vessel_count{3, 6};
  IntRange exudate_count{3, 10};
  IntRange exudate_radius{4, 12};
  double exudate_brightness = 0.95;
  IntRange drusen_count{8, 30};
  IntRange drusen_radius{1, 3};
  double drusen_brightness = 0.4;
};

// Throws kInvalidArgument when counts, radii or brightness are out of range.
void validate(const SynthConfig& cfg);

// Images are ordered class-major (all Normal, then Exudates, then Drusen).
// Manifest paths are relative: images/<class>_NNNN.png, source "synthetic".
struct SynthCorpus {
  std::vector<ImageTensor> images;
  DatasetManifest manifest;
};

SynthCorpus generate(const SynthConfig& cfg);

// Image number `index` in class-major order, drawn from SplitMix64(seed ^ index).
ImageTensor synth_image(const SynthConfig& cfg, ClassLabel label, std::size_t index);

// Writes every image as PNG plus manifest.csv under dir. Returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus);

}  // namespace retina
