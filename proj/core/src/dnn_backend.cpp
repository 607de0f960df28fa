#include <mutex>

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include "retina/deepfeat.hpp"
#include "retina/error.hpp"

namespace retina {
namespace {

class DnnBackend final : public ExtractorBackend {
 public:
  DnnBackend(const std::filesystem::path& path, const std::string& layer, PreprocessRecipe recipe)
      : ExtractorBackend(path.stem().string(), 0, recipe) {
    if (!std::filesystem::exists(path)) {
      throw Error(ErrorCode::kModelLoadFailure, "no such model file: " + path.string());
    }
    try {
      net_ = cv::dnn::readNet(path.string());
    } catch (const cv::Exception& e) {
      throw Error(ErrorCode::kModelLoadFailure, path.string() + ": " + e.what());
    }
    if (net_.empty()) throw Error(ErrorCode::kModelLoadFailure, path.string() + ": empty network");
    net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);

    layer_ = layer.empty() ? find_feature_layer() : layer;
    const int id = net_.getLayerId(layer_);
    if (id < 0) throw Error(ErrorCode::kMissingPenultimateLayer, "no layer named '" + layer_ + "'");

    std::vector<cv::dnn::MatShape> in_shapes, out_shapes;
    try {
      net_.getLayerShapes(cv::dnn::MatShape{1, 3, kNetworkInputSide, kNetworkInputSide}, id,
                          in_shapes, out_shapes);
    } catch (const cv::Exception& e) {
      throw Error(ErrorCode::kModelLoadFailure, "shape inference failed: " + std::string(e.what()));
    }
    if (out_shapes.empty()) throw Error(ErrorCode::kMissingPenultimateLayer, layer_ + " has no output");
    std::size_t dim = 1;
    const auto& shape = out_shapes.front();
    for (std::size_t i = 1; i < shape.size(); ++i) dim *= static_cast<std::size_t>(shape[i]);
    set_output_dim(dim);
  }

  std::vector<double> forward(const ImageTensor& img) const override {
    const int side = kNetworkInputSide;
    int dims[4] = {1, 3, side, side};
    cv::Mat blob(4, dims, CV_32F);
    float* p = blob.ptr<float>();
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) *p++ = static_cast<float>(img.at(x, y, c));
      }
    }
    cv::Mat out;
    try {
      // cv::dnn::Net is not re-entrant.
      std::lock_guard lock(mutex_);
      net_.setInput(blob);
      out = net_.forward(layer_);
    } catch (const cv::Exception& e) {
      throw Error(ErrorCode::kBackendFailure, e.what());
    }
    cv::Mat flat = out.reshape(1, 1);
    std::vector<double> v(flat.total());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = flat.at<float>(static_cast<int>(i));
    return v;
  }

 private:
  std::string find_feature_layer() {
    const auto names = net_.getLayerNames();
    for (auto it = names.rbegin(); it != names.rend(); ++it) {
      auto l = net_.getLayer(net_.getLayerId(*it));
      if (l->type != "Softmax") continue;
      auto classifier = net_.getLayerInputs(net_.getLayerId(*it));
      if (classifier.empty()) break;
      auto feature = net_.getLayerInputs(net_.getLayerId(classifier.front()->name));
      if (feature.empty() || feature.front()->name == "_input") break;
      return feature.front()->name;
    }
    throw Error(ErrorCode::kMissingPenultimateLayer,
                "no Softmax with a preceding feature layer; pass the layer name explicitly");
  }

  mutable cv::dnn::Net net_;
  mutable std::mutex mutex_;
  std::string layer_;
};

}  // namespace

bool pretrained_backend_available() { return true; }

std::unique_ptr<ExtractorBackend> pretrained_backend(const std::filesystem::path& model_path,
                                                     const std::string& layer,
                                                     PreprocessRecipe recipe) {
  return std::make_unique<DnnBackend>(model_path, layer, recipe);
}

}  // namespace retina
