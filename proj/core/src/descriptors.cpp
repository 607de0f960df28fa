#include "retina/descriptors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "retina/error.hpp"

namespace retina {
namespace {

constexpr int kOctaves = 4;
constexpr int kLayers = 4;
// Box-filter size 9 corresponds to a Gaussian of sigma 1.2.
constexpr double kScalePerFilterSize = 1.2 / 9.0;
constexpr double kDuplicateRadius = 1.5;  // in scale units
constexpr double kEchoRatio = 0.05;

int filter_size(int octave, int layer) { return 3 * ((2 << octave) * (layer + 1) + 1); }

void normalize_l2(std::array<double, kDescriptorDim>& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (ss == 0.0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (double& x : v) x *= inv;
}

// Determinant-of-Hessian response map for one filter size, sampled every
// `step` pixels.
struct ResponseLayer {
  int size = 0;
  int step = 1;
  int cols = 0;
  int rows = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
};

ResponseLayer build_layer(const IntegralImage& ii, int size, int step) {
  ResponseLayer layer;
  layer.size = size;
  layer.step = step;
  layer.cols = ii.width() / step;
  layer.rows = ii.height() / step;
  layer.values.resize(static_cast<std::size_t>(layer.cols) * layer.rows);

  const int lobe = size / 3;
  const int border = (size - 1) / 2;
  const double inv_area = 1.0 / (static_cast<double>(size) * size);
  // box(row, col, rows, cols) in the conventional Fast-Hessian layout.
  auto box = [&](int row, int col, int nrows, int ncols) {
    return ii.box_sum(col, row, col + ncols, row + nrows);
  };
  for (int r = 0; r < layer.rows; ++r) {
    const int y = r * step;
    for (int c = 0; c < layer.cols; ++c) {
      const int x = c * step;
      double dxx = box(y - lobe + 1, x - border, 2 * lobe - 1, size) -
                   3.0 * box(y - lobe + 1, x - lobe / 2, 2 * lobe - 1, lobe);
      double dyy = box(y - border, x - lobe + 1, size, 2 * lobe - 1) -
                   3.0 * box(y - lobe / 2, x - lobe + 1, lobe, 2 * lobe - 1);
      double dxy = box(y - lobe, x + 1, lobe, lobe) + box(y + 1, x - lobe, lobe, lobe) -
                   box(y - lobe, x - lobe, lobe, lobe) - box(y + 1, x + 1, lobe, lobe);
      dxx *= inv_area;
      dyy *= inv_area;
      dxy *= inv_area;
      layer.values[static_cast<std::size_t>(r) * layer.cols + c] = dxx * dyy - 0.81 * dxy * dxy;
    }
  }
  return layer;
}

bool is_local_max(const ResponseLayer& bot, const ResponseLayer& mid, const ResponseLayer& top,
                  int r, int c) {
  const double v = mid.at(r, c);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (bot.at(r + dr, c + dc) >= v || top.at(r + dr, c + dc) >= v) return false;
      if ((dr != 0 || dc != 0) && mid.at(r + dr, c + dc) >= v) return false;
    }
  }
  return true;
}

// Solves H * x = b for a symmetric 3x3 system by Cramer's rule; false when
// singular.
bool solve3(const double h[3][3], const double b[3], double x[3]) {
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double d = det3(h);
  if (d == 0.0 || !std::isfinite(d)) return false;
  for (int k = 0; k < 3; ++k) {
    double m[3][3];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) m[i][j] = (j == k) ? b[i] : h[i][j];
    }
    x[k] = det3(m) / d;
  }
  return true;
}

}  // namespace

double Descriptor::norm() const {
  double ss = 0.0;
  for (double v : values) ss += v * v;
  return std::sqrt(ss);
}

bool Descriptor::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::size_t DescriptorSet::count(DescriptorKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      descriptors.begin(), descriptors.end(), [&](const Descriptor& d) { return d.kind == kind; }));
}

std::size_t DescriptorSet::count(DescriptorKind kind, Channel channel) const {
  return static_cast<std::size_t>(
      std::count_if(descriptors.begin(), descriptors.end(), [&](const Descriptor& d) {
        return d.kind == kind && d.channel == channel;
      }));
}

std::vector<PatchView> extract_patch_grid(const ImageTensor& g, int patch) {
  if (g.channels != 1) throw Error(ErrorCode::kNotSingleChannel, "patch grid needs one channel");
  if (patch <= 0 || g.width % patch != 0 || g.height % patch != 0) {
    throw Error(ErrorCode::kNonDivisibleDimensions,
                std::to_string(g.width) + "x" + std::to_string(g.height) + " by patch " +
                    std::to_string(patch));
  }
  std::vector<PatchView> out;
  out.reserve(static_cast<std::size_t>(g.width / patch) * (g.height / patch));
  for (int y = 0; y < g.height; y += patch) {
    for (int x = 0; x < g.width; x += patch) out.emplace_back(g, x, y, patch);
  }
  return out;
}

std::vector<Keypoint> detect_surf(const ImageTensor& g, double threshold) {
  if (g.channels != 1) throw Error(ErrorCode::kNotSingleChannel, "detect_surf needs one channel");
  if (!(threshold > 0.0)) throw Error(ErrorCode::kInvalidArgument, "threshold must be > 0");
  const IntegralImage ii(g);
  std::vector<Keypoint> kps;

  for (int o = 0; o < kOctaves; ++o) {
    const int step = 1 << o;
    std::vector<ResponseLayer> layers;
    layers.reserve(kLayers);
    for (int l = 0; l < kLayers; ++l) layers.push_back(build_layer(ii, filter_size(o, l), step));

    for (int l = 1; l + 1 < kLayers; ++l) {
      const ResponseLayer& bot = layers[l - 1];
      const ResponseLayer& mid = layers[l];
      const ResponseLayer& top = layers[l + 1];
      // The largest filter of the triple must fit inside the image.
      const int border = (top.size + 1) / (2 * step);
      for (int r = border + 1; r < mid.rows - border - 1; ++r) {
        for (int c = border + 1; c < mid.cols - border - 1; ++c) {
          const double v = mid.at(r, c);
          if (v < threshold || !is_local_max(bot, mid, top, r, c)) continue;

          const double grad[3] = {(mid.at(r, c + 1) - mid.at(r, c - 1)) / 2.0,
                                  (mid.at(r + 1, c) - mid.at(r - 1, c)) / 2.0,
                                  (top.at(r, c) - bot.at(r, c)) / 2.0};
          const double dxx = mid.at(r, c + 1) + mid.at(r, c - 1) - 2.0 * v;
          const double dyy = mid.at(r + 1, c) + mid.at(r - 1, c) - 2.0 * v;
          const double dss = top.at(r, c) + bot.at(r, c) - 2.0 * v;
          const double dxy = (mid.at(r + 1, c + 1) - mid.at(r + 1, c - 1) -
                              mid.at(r - 1, c + 1) + mid.at(r - 1, c - 1)) / 4.0;
          const double dxs = (top.at(r, c + 1) - top.at(r, c - 1) - bot.at(r, c + 1) +
                              bot.at(r, c - 1)) / 4.0;
          const double dys = (top.at(r + 1, c) - top.at(r - 1, c) - bot.at(r + 1, c) +
                              bot.at(r - 1, c)) / 4.0;
          const double hess[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
          const double neg_grad[3] = {-grad[0], -grad[1], -grad[2]};
          double off[3] = {0.0, 0.0, 0.0};
          // A peak midway between samples can fit slightly past 0.5; only
          // offsets beyond a full sample are unstable.
          if (solve3(hess, neg_grad, off) &&
              (std::abs(off[0]) > 1.0 || std::abs(off[1]) > 1.0 || std::abs(off[2]) > 1.0)) {
            continue;
          }
          Keypoint kp;
          kp.x = (c + off[0]) * step;
          kp.y = (r + off[1]) * step;
          const double filter_step = mid.size - bot.size;
          kp.scale = kScalePerFilterSize * (mid.size + off[2] * filter_step);
          kp.response = v;
          if (kp.x < 0.0 || kp.y < 0.0 || kp.x >= g.width || kp.y >= g.height) continue;
          kps.push_back(kp);
        }
      }
    }
  }
  std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  // Overlapping octaves report one blob twice, and the box filters ring
  // weakly around strong blobs. Keep a keypoint only when no stronger kept
  // keypoint covers it.
  std::vector<Keypoint> kept;
  for (const Keypoint& k : kps) {
    const bool covered = std::any_of(kept.begin(), kept.end(), [&](const Keypoint& s) {
      const double d = std::hypot(k.x - s.x, k.y - s.y);
      if (d <= kDuplicateRadius * std::max(s.scale, k.scale)) return true;
      return d <= 10.0 * s.scale && k.response < kEchoRatio * s.response;
    });
    if (!covered) kept.push_back(k);
  }
  return kept;
}

bool surf_window_fits(const ImageTensor& g, const Keypoint& kp) {
  const double m = 10.0 * kp.scale;
  return kp.scale > 0.0 && kp.x - m >= 0.0 && kp.y - m >= 0.0 && kp.x + m <= g.width &&
         kp.y + m <= g.height;
}

namespace {

Descriptor describe_surf_integral(const IntegralImage& ii, const Keypoint& kp) {
  const double s = kp.scale;
  const int half = std::max(1, static_cast<int>(std::lround(s)));
  const double area = 2.0 * half * 2.0 * half;
  // Integral-image cancellation leaves ~1e-11 residue on flat regions;
  // anything below this floor is treated as no response.
  const double floor = 1e-8 * area;
  const double sigma = 3.3 * s;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  Descriptor d;
  d.kind = DescriptorKind::kSurf;
  std::size_t k = 0;
  for (int sy = 0; sy < 4; ++sy) {
    for (int sx = 0; sx < 4; ++sx) {
      double sum_dx = 0.0, sum_dy = 0.0, sum_adx = 0.0, sum_ady = 0.0;
      for (int v = 0; v < 5; ++v) {
        for (int u = 0; u < 5; ++u) {
          const double ox = (sx * 5 + u - 10 + 0.5) * s;
          const double oy = (sy * 5 + v - 10 + 0.5) * s;
          const int px = static_cast<int>(std::lround(kp.x + ox));
          const int py = static_cast<int>(std::lround(kp.y + oy));
          double hx = ii.box_sum(px, py - half, px + half, py + half) -
                      ii.box_sum(px - half, py - half, px, py + half);
          double hy = ii.box_sum(px - half, py, px + half, py + half) -
                      ii.box_sum(px - half, py - half, px + half, py);
          if (std::abs(hx) <= floor) hx = 0.0;
          if (std::abs(hy) <= floor) hy = 0.0;
          const double w = std::exp(-(ox * ox + oy * oy) * inv_two_sigma2);
          hx *= w;
          hy *= w;
          sum_dx += hx;
          sum_dy += hy;
          sum_adx += std::abs(hx);
          sum_ady += std::abs(hy);
        }
      }
      d.values[k++] = sum_dx;
      d.values[k++] = sum_dy;
      d.values[k++] = sum_adx;
      d.values[k++] = sum_ady;
    }
  }
  normalize_l2(d.values);
  return d;
}

}  // namespace

Descriptor describe_surf(const ImageTensor& g, const Keypoint& kp) {
  if (g.channels != 1) throw Error(ErrorCode::kNotSingleChannel, "describe_surf needs one channel");
  if (!surf_window_fits(g, kp)) {
    throw Error(ErrorCode::kKeypointOutOfBounds,
                "keypoint (" + std::to_string(kp.x) + ", " + std::to_string(kp.y) +
                    ") scale " + std::to_string(kp.scale));
  }
  return describe_surf_integral(IntegralImage(g), kp);
}

Descriptor hog_patch(const PatchView& patch) {
  if (patch.size() != kPatchSize) {
    throw Error(ErrorCode::kWrongPatchSize, "HOG patch must be 28x28, got " +
                                                std::to_string(patch.size()));
  }
  constexpr int kCell = 7;
  constexpr int kBins = 4;
  constexpr double kBinWidth = std::numbers::pi / kBins;
  const int last = kPatchSize - 1;

  Descriptor d;
  d.kind = DescriptorKind::kHog;
  for (int y = 0; y < kPatchSize; ++y) {
    for (int x = 0; x < kPatchSize; ++x) {
      const double gx = patch(std::min(x + 1, last), y) - patch(std::max(x - 1, 0), y);
      const double gy = patch(x, std::min(y + 1, last)) - patch(x, std::max(y - 1, 0));
      if (gx == 0.0 && gy == 0.0) continue;
      const double mag = std::hypot(gx, gy);
      double theta = std::atan2(gy, gx);
      if (theta < 0.0) theta += std::numbers::pi;
      if (theta >= std::numbers::pi) theta -= std::numbers::pi;
      const double pos = theta / kBinWidth;
      const double lower = std::floor(pos);
      const double frac = pos - lower;
      const int b0 = static_cast<int>(lower) % kBins;
      const int b1 = (b0 + 1) % kBins;
      const int cell = (y / kCell) * 4 + (x / kCell);
      d.values[cell * kBins + b0] += mag * (1.0 - frac);
      d.values[cell * kBins + b1] += mag * frac;
    }
  }
  normalize_l2(d.values);
  return d;
}

int lbp_uniform_bin(unsigned code) {
  static const std::array<int, 256> table = [] {
    std::array<int, 256> t{};
    int next = 0;
    for (unsigned c = 0; c < 256; ++c) {
      unsigned rotated = ((c << 1) | (c >> 7)) & 0xFFu;
      int transitions = __builtin_popcount(c ^ rotated);
      t[c] = transitions <= 2 ? next++ : -1;
    }
    for (int& v : t) {
      if (v < 0) v = next;  // 58: shared non-uniform bin
    }
    return t;
  }();
  return table[code & 0xFFu];
}

Descriptor lbp_patch(const PatchView& patch) {
  if (patch.size() != kPatchSize) {
    throw Error(ErrorCode::kWrongPatchSize, "LBP patch must be 28x28, got " +
                                                std::to_string(patch.size()));
  }
  // Clockwise from the top-left neighbour; bit i set when neighbour >= centre.
  static constexpr int kDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
  static constexpr int kDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};
  std::array<double, kDescriptorDim> hist{};
  for (int y = 1; y < kPatchSize - 1; ++y) {
    for (int x = 1; x < kPatchSize - 1; ++x) {
      const double centre = patch(x, y);
      unsigned code = 0;
      for (int i = 0; i < 8; ++i) {
        if (patch(x + kDx[i], y + kDy[i]) >= centre) code |= 1u << i;
      }
      hist[lbp_uniform_bin(code)] += 1.0;
    }
  }
  double l1 = 0.0;
  for (double v : hist) l1 += v;
  for (double& v : hist) v /= l1;

  Descriptor d;
  d.kind = DescriptorKind::kLbp;
  d.values = hist;
  normalize_l2(d.values);
  return d;
}

DescriptorSet extract_all(const ImageTensor& rgb, const ExtractOptions& opts) {
  const RgbPlanes planes = split_channels(rgb);
  const ImageTensor* chans[3] = {&planes.r, &planes.g, &planes.b};
  DescriptorSet set;
  for (int ci = 0; ci < 3; ++ci) {
    const ImageTensor& g = *chans[ci];
    const auto channel = static_cast<Channel>(ci);
    const auto grid = extract_patch_grid(g, kPatchSize);
    const IntegralImage ii(g);
    for (const Keypoint& kp : detect_surf(g, opts.surf_threshold)) {
      if (!surf_window_fits(g, kp)) continue;
      Descriptor d = describe_surf_integral(ii, kp);
      d.channel = channel;
      set.descriptors.push_back(d);
    }
    for (const PatchView& p : grid) {
      Descriptor d = hog_patch(p);
      d.channel = channel;
      set.descriptors.push_back(d);
    }
    for (const PatchView& p : grid) {
      Descriptor d = lbp_patch(p);
      d.channel = channel;
      set.descriptors.push_back(d);
    }
  }
  return set;
}

void write_keypoints_csv(const std::filesystem::path& path, const std::vector<Keypoint>& kps) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "x,y,scale,response\n";
  out.precision(17);
  for (const Keypoint& k : kps) {
    out << k.x << ',' << k.y << ',' << k.scale << ',' << k.response << '\n';
  }
}

}  // namespace retina
