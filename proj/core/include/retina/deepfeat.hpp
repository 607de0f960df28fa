#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "retina/dataset.hpp"
#include "retina/feature.hpp"
#include "retina/image.hpp"

namespace retina {

inline constexpr int kNetworkInputSide = 224;

// Per-channel (value - mean) / stddev applied to [0,1] RGB before inference.
struct PreprocessRecipe {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

// A feature extractor producing the pre-softmax activation vector of a
// network. Implementations are immutable after construction, so forward()
// may be called concurrently.
class ExtractorBackend {
 public:
  ExtractorBackend(std::string model_id, std::size_t output_dim, PreprocessRecipe recipe)
      : model_id_(std::move(model_id)), output_dim_(output_dim), recipe_(recipe) {}
  virtual ~ExtractorBackend() = default;

  const std::string& model_id() const { return model_id_; }
  std::size_t output_dim() const { return output_dim_; }
  const PreprocessRecipe& recipe() const { return recipe_; }

  // Raw activations for a recipe-normalized 224x224x3 tensor.
  virtual std::vector<double> forward(const ImageTensor& normalized) const = 0;

 protected:
  void set_output_dim(std::size_t dim) { output_dim_ = dim; }

 private:
  std::string model_id_;
  std::size_t output_dim_;
  PreprocessRecipe recipe_;
};

// Applies the backend recipe, runs a single forward pass and scales the
// result to unit length. Input must already be 224x224x3.
FeatureVector extract_deep(const ImageTensor& img, const ExtractorBackend& backend);

// Deterministic stand-in for a pretrained network: 14x14 block-average the
// image to 16x16x3 (768 values, (y, x, c) order), multiply by a dim x 768
// sign matrix drawn row-major from SplitMix64(seed) (-1 when the top bit of
// the draw is set, +1 otherwise), then ReLU. Recipe subtracts 0.5.
class MockBackend final : public ExtractorBackend {
 public:
  MockBackend(std::uint64_t seed, std::size_t dim);

  std::vector<double> forward(const ImageTensor& normalized) const override;
  const std::vector<std::int8_t>& sign_matrix() const { return signs_; }

  static constexpr int kGrid = 16;
  static constexpr std::size_t kInputs = kGrid * kGrid * 3;

 private:
  std::vector<std::int8_t> signs_;
};

std::unique_ptr<ExtractorBackend> mock_backend(std::uint64_t seed, std::size_t dim);

// Pretrained network loaded through OpenCV dnn (ONNX, Caffe, TensorFlow).
// When `layer` is empty the feature layer is the input of the layer that
// feeds the final Softmax. Throws kModelLoadFailure or
// kMissingPenultimateLayer; kBackendFailure when built without dnn support.
std::unique_ptr<ExtractorBackend> pretrained_backend(const std::filesystem::path& model_path,
                                                     const std::string& layer = {},
                                                     PreprocessRecipe recipe = {
                                                         {0.485, 0.456, 0.406},
                                                         {0.229, 0.224, 0.225}});
bool pretrained_backend_available();

// "mock:SEED:DIM" or "onnx:PATH[:LAYER]".
std::unique_ptr<ExtractorBackend> make_backend(std::string_view spec);

struct FeatureRecord {
  ClassLabel label = ClassLabel::kNormal;
  FeatureVector vector;

  bool operator==(const FeatureRecord&) const = default;
};

// "RFV1", u32 n, u32 d, then n x ([u8 label][d x float32]); little-endian.
void write_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& records);
std::vector<FeatureRecord> read_features(const std::filesystem::path& path);

}  // namespace retina
