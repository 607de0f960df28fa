#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "retina/image.hpp"

namespace retina {

inline constexpr std::size_t kDescriptorDim = 64;
inline constexpr int kPatchSize = 28;
inline constexpr double kDefaultSurfThreshold = 2e-4;

enum class DescriptorKind : std::uint8_t { kSurf, kHog, kLbp };
enum class Channel : std::uint8_t { kR, kG, kB };

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;
  double response = 0.0;
};

struct Descriptor {
  std::array<double, kDescriptorDim> values{};
  DescriptorKind kind = DescriptorKind::kSurf;
  Channel channel = Channel::kR;

  double norm() const;
  bool is_zero() const;
};

struct DescriptorSet {
  std::vector<Descriptor> descriptors;

  std::size_t size() const { return descriptors.size(); }
  bool empty() const { return descriptors.empty(); }
  std::size_t count(DescriptorKind kind) const;
  std::size_t count(DescriptorKind kind, Channel channel) const;
};

// Non-owning view of a square region of a single-channel image.
class PatchView {
 public:
  PatchView(const ImageTensor& img, int x0, int y0, int size)
      : img_(&img), x0_(x0), y0_(y0), size_(size) {}

  int size() const { return size_; }
  int x0() const { return x0_; }
  int y0() const { return y0_; }
  double operator()(int x, int y) const { return img_->at(x0_ + x, y0_ + y); }

 private:
  const ImageTensor* img_;
  int x0_, y0_, size_;
};

// Non-overlapping patch x patch tiles in row-major order.
std::vector<PatchView> extract_patch_grid(const ImageTensor& g, int patch = kPatchSize);

// Fast-Hessian detector: box-filter determinant of Hessian over 4 octaves of
// 4 filter sizes each, 3x3x3 non-maximum suppression and quadratic
// sub-pixel refinement. A keypoint within 1.5 scale units of a stronger one,
// or inside a stronger one's descriptor window with under 5% of its
// response, is dropped. Sorted by descending response, ties by (y, x).
std::vector<Keypoint> detect_surf(const ImageTensor& g,
                                  double threshold = kDefaultSurfThreshold);

// True when the 20*scale descriptor window lies inside the image.
bool surf_window_fits(const ImageTensor& g, const Keypoint& kp);

// Upright 64-D SURF descriptor. Throws kKeypointOutOfBounds unless
// surf_window_fits(g, kp).
Descriptor describe_surf(const ImageTensor& g, const Keypoint& kp);

// 4x4 cells of 7x7 pixels, 4 unsigned orientation bins centred on
// 0, 45, 90 and 135 degrees with linear interpolation between bins.
Descriptor hog_patch(const PatchView& patch);

// Radius-1 8-neighbour LBP over the 26x26 interior, 59-bin uniform histogram
// zero-padded to 64 and scaled to unit L2 norm.
Descriptor lbp_patch(const PatchView& patch);

// Maps an 8-bit LBP code to its uniform-pattern bin in [0, 58].
int lbp_uniform_bin(unsigned code);

struct ExtractOptions {
  double surf_threshold = kDefaultSurfThreshold;
};

// Per channel R, G, B: SURF descriptors at detected keypoints whose window
// fits, then HOG and LBP on the 28x28 grid.
DescriptorSet extract_all(const ImageTensor& rgb, const ExtractOptions& opts = {});

// CSV `x,y,scale,response`.
void write_keypoints_csv(const std::filesystem::path& path, const std::vector<Keypoint>& kps);

}  // namespace retina
