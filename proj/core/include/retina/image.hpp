#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace retina {

// Row-major, channel-interleaved image with values in [0, 1].
struct ImageTensor {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  bool empty() const { return data.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

  double& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool operator==(const ImageTensor&) const = default;
};

// Summed-area table of size (width+1) x (height+1); row 0 and column 0 are
// zero, so sum(x, y) is the total over pixels [0, x) x [0, y).
class IntegralImage {
 public:
  IntegralImage() = default;
  explicit IntegralImage(const ImageTensor& gray);

  int width() const { return width_; }
  int height() const { return height_; }
  double sum(int x, int y) const {
    return table_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }
  // Sum over [x0, x1) x [y0, y1), clipped to the image.
  double box_sum(int x0, int y0, int x1, int y1) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> table_;
};

// Half-pixel-center bilinear sampling with edge clamping.
ImageTensor resize_bilinear(const ImageTensor& img, int out_w, int out_h);

struct RgbPlanes {
  ImageTensor r, g, b;
};
RgbPlanes split_channels(const ImageTensor& img);
ImageTensor merge_channels(const RgbPlanes& planes);

// clamp(0.5 + 0.15 (g - mean) / stddev, 0, 1); uniform 0.5 when the
// population stddev is below 1e-6.
ImageTensor normalize_green(const ImageTensor& g);

IntegralImage integral_image(const ImageTensor& g);

// Resize to side x side, then normalize only the green channel.
ImageTensor preprocess_for_bovw(const ImageTensor& rgb, int side = 224);

// 8-bit RGB decode via OpenCV; grayscale, alpha and 16-bit inputs are rejected.
ImageTensor load_image(const std::filesystem::path& path);
// Writes 8-bit PNG; values are scaled by 255 and rounded.
void save_png(const std::filesystem::path& path, const ImageTensor& img);

}  // namespace retina
