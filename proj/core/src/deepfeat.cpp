#include "retina/deepfeat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"
#include "retina/error.hpp"
#include "retina/rng.hpp"

namespace retina {

FeatureVector extract_deep(const ImageTensor& img, const ExtractorBackend& backend) {
  if (img.width != kNetworkInputSide || img.height != kNetworkInputSide || img.channels != 3) {
    throw Error(ErrorCode::kDimensionMismatch,
                "network input must be 224x224x3, got " + std::to_string(img.width) + "x" +
                    std::to_string(img.height) + "x" + std::to_string(img.channels));
  }
  ImageTensor normalized = img;
  const PreprocessRecipe& r = backend.recipe();
  for (std::size_t i = 0; i < normalized.data.size(); ++i) {
    const std::size_t c = i % 3;
    normalized.data[i] = (normalized.data[i] - r.mean[c]) / r.stddev[c];
  }
  std::vector<double> act = backend.forward(normalized);
  if (act.size() != backend.output_dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                backend.model_id() + " returned " + std::to_string(act.size()) +
                    " values, expected " + std::to_string(backend.output_dim()));
  }
  for (double v : act) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kBackendFailure, backend.model_id() + ": non-finite activation");
  }
  FeatureVector fv;
  fv.kind = FeatureKind::kDeep;
  fv.model_id = backend.model_id();
  fv.values = std::move(act);
  fv.degenerate = !normalize_unit(fv.values);
  return fv;
}

MockBackend::MockBackend(std::uint64_t seed, std::size_t dim)
    : ExtractorBackend("mock:" + std::to_string(seed) + ":" + std::to_string(dim), dim,
                       PreprocessRecipe{{0.5, 0.5, 0.5}, {1.0, 1.0, 1.0}}) {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "mock backend dim must be >= 1");
  SplitMix64 rng(seed);
  signs_.resize(dim * kInputs);
  for (auto& s : signs_) s = (rng.next() >> 63) ? std::int8_t{-1} : std::int8_t{1};
}

std::vector<double> MockBackend::forward(const ImageTensor& img) const {
  std::vector<double> pooled(kInputs, 0.0);
  for (int gy = 0; gy < kGrid; ++gy) {
    const int y0 = gy * img.height / kGrid, y1 = (gy + 1) * img.height / kGrid;
    for (int gx = 0; gx < kGrid; ++gx) {
      const int x0 = gx * img.width / kGrid, x1 = (gx + 1) * img.width / kGrid;
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < 3; ++c) {
        double s = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) s += img.at(x, y, c);
        }
        pooled[(static_cast<std::size_t>(gy) * kGrid + gx) * 3 + c] = s / n;
      }
    }
  }
  std::vector<double> out(output_dim());
  for (std::size_t r = 0; r < out.size(); ++r) {
    const std::int8_t* row = signs_.data() + r * kInputs;
    double acc = 0.0;
    for (std::size_t i = 0; i < kInputs; ++i) acc += row[i] * pooled[i];
    out[r] = std::max(0.0, acc);
  }
  return out;
}

std::unique_ptr<ExtractorBackend> mock_backend(std::uint64_t seed, std::size_t dim) {
  return std::make_unique<MockBackend>(seed, dim);
}

#ifndef RETINA_WITH_DNN
bool pretrained_backend_available() { return false; }

std::unique_ptr<ExtractorBackend> pretrained_backend(const std::filesystem::path& model_path,
                                                     const std::string&, PreprocessRecipe) {
  throw Error(ErrorCode::kBackendFailure,
              "built without RETINA_WITH_DNN; cannot load " + model_path.string());
}
#endif

std::unique_ptr<ExtractorBackend> make_backend(std::string_view spec) {
  auto bad = [&] {
    return Error(ErrorCode::kInvalidArgument,
                 "backend spec must be mock:SEED:DIM or onnx:PATH[:LAYER], got '" +
                     std::string(spec) + "'");
  };
  if (spec.starts_with("mock:")) {
    std::string_view rest = spec.substr(5);
    const auto colon = rest.find(':');
    if (colon == std::string_view::npos) throw bad();
    std::uint64_t seed = 0, dim = 0;
    auto parse = [](std::string_view s, std::uint64_t& v) {
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc() && p == s.data() + s.size() && !s.empty();
    };
    if (!parse(rest.substr(0, colon), seed) || !parse(rest.substr(colon + 1), dim) || dim == 0) {
      throw bad();
    }
    return mock_backend(seed, dim);
  }
  if (spec.starts_with("onnx:")) {
    std::string_view rest = spec.substr(5);
    std::string layer;
    // A trailing ":name" selects the feature layer; keep Windows drive
    // letters ("C:\...") intact.
    const auto colon = rest.rfind(':');
    if (colon != std::string_view::npos && colon > 1) {
      layer = std::string(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    if (rest.empty()) throw bad();
    return pretrained_backend(std::filesystem::path(std::string(rest)), layer);
  }
  throw bad();
}

void write_features(const std::filesystem::path& path, const std::vector<FeatureRecord>& records) {
  const std::size_t dim = records.empty() ? 0 : records.front().vector.dim();
  for (const auto& r : records) {
    if (r.vector.dim() != dim) {
      throw Error(ErrorCode::kDimMismatch, "records have differing dimensions");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write("RFV1", 4);
  binio::put_u32(out, static_cast<std::uint32_t>(records.size()));
  binio::put_u32(out, static_cast<std::uint32_t>(dim));
  for (const auto& r : records) {
    binio::put_u8(out, static_cast<std::uint8_t>(index_of(r.label)));
    for (double v : r.vector.values) binio::put_f32(out, static_cast<float>(v));
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::vector<FeatureRecord> read_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) throw Error(ErrorCode::kTruncatedFile, path.string() + ": no header");
  if (std::string_view(magic, 4) != "RFV1") throw Error(ErrorCode::kBadMagic, path.string());
  std::uint32_t n = 0, dim = 0;
  if (!binio::get_u32(in, n) || !binio::get_u32(in, dim)) {
    throw Error(ErrorCode::kTruncatedFile, path.string() + ": short header");
  }
  std::vector<FeatureRecord> records;
  records.reserve(std::min<std::uint32_t>(n, 1u << 16));
  for (std::uint32_t i = 0; i < n; ++i) {
    std::uint8_t label = 0;
    FeatureRecord r;
    r.vector.kind = FeatureKind::kDeep;
    r.vector.values.resize(dim);
    bool ok = binio::get_u8(in, label);
    for (std::uint32_t d = 0; ok && d < dim; ++d) {
      float f = 0.0f;
      ok = binio::get_f32(in, f);
      r.vector.values[d] = f;
    }
    if (!ok) {
      throw Error(ErrorCode::kTruncatedFile, path.string() + ": header claims " +
                                                 std::to_string(n) + " records, found " +
                                                 std::to_string(i));
    }
    r.label = label_from_ordinal(label);
    r.vector.degenerate = l2_norm(r.vector.values) == 0.0;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace retina
