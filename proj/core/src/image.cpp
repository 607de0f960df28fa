#include "retina/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "retina/error.hpp"

namespace retina {
namespace {

void require_single_channel(const ImageTensor& g, const char* op) {
  if (g.channels != 1) {
    throw Error(ErrorCode::kNotSingleChannel,
                std::string(op) + " expects one channel, got " + std::to_string(g.channels));
  }
}

}  // namespace

IntegralImage::IntegralImage(const ImageTensor& gray)
    : width_(gray.width), height_(gray.height),
      table_(static_cast<std::size_t>(gray.width + 1) * (gray.height + 1), 0.0) {
  require_single_channel(gray, "integral_image");
  const std::size_t stride = static_cast<std::size_t>(width_) + 1;
  for (int y = 0; y < height_; ++y) {
    double row = 0.0;
    for (int x = 0; x < width_; ++x) {
      row += gray.at(x, y);
      table_[(y + 1) * stride + x + 1] = table_[y * stride + x + 1] + row;
    }
  }
}

double IntegralImage::box_sum(int x0, int y0, int x1, int y1) const {
  x0 = std::clamp(x0, 0, width_);
  x1 = std::clamp(x1, 0, width_);
  y0 = std::clamp(y0, 0, height_);
  y1 = std::clamp(y1, 0, height_);
  if (x1 <= x0 || y1 <= y0) return 0.0;
  return sum(x1, y1) - sum(x0, y1) - sum(x1, y0) + sum(x0, y0);
}

ImageTensor resize_bilinear(const ImageTensor& img, int out_w, int out_h) {
  if (img.empty() || img.width <= 0 || img.height <= 0) {
    throw Error(ErrorCode::kEmptyImage, "resize of empty image");
  }
  if (out_w < 1 || out_h < 1) {
    throw Error(ErrorCode::kZeroTargetDimension,
                std::to_string(out_w) + "x" + std::to_string(out_h));
  }
  if (out_w == img.width && out_h == img.height) return img;

  // Precompute the source taps along each axis.
  struct Tap {
    int i0, i1;
    double f;
  };
  auto taps = [](int in, int out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
      double src = std::clamp((o + 0.5) * scale - 0.5, 0.0, static_cast<double>(in - 1));
      int i0 = static_cast<int>(std::floor(src));
      int i1 = std::min(i0 + 1, in - 1);
      t[o] = {i0, i1, src - i0};
    }
    return t;
  };
  const auto tx = taps(img.width, out_w);
  const auto ty = taps(img.height, out_h);

  ImageTensor out(out_w, out_h, img.channels);
  for (int y = 0; y < out_h; ++y) {
    const Tap& vy = ty[y];
    for (int x = 0; x < out_w; ++x) {
      const Tap& vx = tx[x];
      for (int c = 0; c < img.channels; ++c) {
        double a = img.at(vx.i0, vy.i0, c), b = img.at(vx.i1, vy.i0, c);
        double d = img.at(vx.i0, vy.i1, c), e = img.at(vx.i1, vy.i1, c);
        double top = a + vx.f * (b - a);
        double bottom = d + vx.f * (e - d);
        double v = top + vy.f * (bottom - top);
        // Rounding must not leave the convex hull of the four taps.
        double lo = std::min({a, b, d, e}), hi = std::max({a, b, d, e});
        out.at(x, y, c) = std::clamp(v, lo, hi);
      }
    }
  }
  return out;
}

RgbPlanes split_channels(const ImageTensor& img) {
  if (img.channels != 3) {
    throw Error(ErrorCode::kNotThreeChannel,
                "expected 3 channels, got " + std::to_string(img.channels));
  }
  RgbPlanes p{ImageTensor(img.width, img.height, 1), ImageTensor(img.width, img.height, 1),
              ImageTensor(img.width, img.height, 1)};
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    p.r.data[i] = img.data[3 * i];
    p.g.data[i] = img.data[3 * i + 1];
    p.b.data[i] = img.data[3 * i + 2];
  }
  return p;
}

ImageTensor merge_channels(const RgbPlanes& p) {
  const ImageTensor* planes[] = {&p.r, &p.g, &p.b};
  for (const ImageTensor* pl : planes) {
    require_single_channel(*pl, "merge_channels");
    if (pl->width != p.r.width || pl->height != p.r.height) {
      throw Error(ErrorCode::kDimensionMismatch, "channel planes differ in size");
    }
  }
  ImageTensor out(p.r.width, p.r.height, 3);
  const std::size_t n = out.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    out.data[3 * i] = p.r.data[i];
    out.data[3 * i + 1] = p.g.data[i];
    out.data[3 * i + 2] = p.b.data[i];
  }
  return out;
}

ImageTensor normalize_green(const ImageTensor& g) {
  require_single_channel(g, "normalize_green");
  ImageTensor out(g.width, g.height, 1, 0.5);
  if (g.empty()) return out;
  const double n = static_cast<double>(g.data.size());
  double mean = 0.0;
  for (double v : g.data) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : g.data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (sd < 1e-6) return out;
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    out.data[i] = std::clamp(0.5 + 0.15 * (g.data[i] - mean) / sd, 0.0, 1.0);
  }
  return out;
}

IntegralImage integral_image(const ImageTensor& g) { return IntegralImage(g); }

ImageTensor preprocess_for_bovw(const ImageTensor& rgb, int side) {
  RgbPlanes p = split_channels(resize_bilinear(rgb, side, side));
  p.g = normalize_green(p.g);
  return merge_channels(p);
}

ImageTensor load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kMissingFile, path.string());
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw Error(ErrorCode::kUnsupportedImage, "cannot decode " + path.string());
  if (raw.depth() != CV_8U || raw.channels() != 3) {
    throw Error(ErrorCode::kUnsupportedImage,
                path.string() + ": need 8-bit 3-channel RGB, got " +
                    std::to_string(raw.channels()) + " channel(s)");
  }
  ImageTensor img(raw.cols, raw.rows, 3);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<cv::Vec3b>(y);
    for (int x = 0; x < raw.cols; ++x) {
      // OpenCV stores BGR.
      img.at(x, y, 0) = row[x][2] / 255.0;
      img.at(x, y, 1) = row[x][1] / 255.0;
      img.at(x, y, 2) = row[x][0] / 255.0;
    }
  }
  return img;
}

void save_png(const std::filesystem::path& path, const ImageTensor& img) {
  if (img.channels != 3 && img.channels != 1) {
    throw Error(ErrorCode::kInvalidArgument, "save_png needs 1 or 3 channels");
  }
  cv::Mat mat(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
  auto to_byte = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (int y = 0; y < img.height; ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 3) {
        row[3 * x] = to_byte(img.at(x, y, 2));
        row[3 * x + 1] = to_byte(img.at(x, y, 1));
        row[3 * x + 2] = to_byte(img.at(x, y, 0));
      } else {
        row[x] = to_byte(img.at(x, y));
      }
    }
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  }
}

}  // namespace retina
