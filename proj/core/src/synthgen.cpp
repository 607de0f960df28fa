#include "retina/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <system_error>

#include <tbb/parallel_for.h>

#include "retina/error.hpp"
#include "retina/rng.hpp"

namespace retina {
namespace {

struct Rgb {
  double r, g, b;
};

void check_range(const IntRange& r, int min_lo, const char* what) {
  if (r.lo < min_lo || r.hi < r.lo) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " range [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
  }
}

void blend(ImageTensor& img, int x, int y, const Rgb& c, double t) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  img.at(x, y, 0) += t * (c.r - img.at(x, y, 0));
  img.at(x, y, 1) += t * (c.g - img.at(x, y, 1));
  img.at(x, y, 2) += t * (c.b - img.at(x, y, 2));
}

void paint_background(ImageTensor& img, SplitMix64& rng) {
  const double side = img.width;
  const double cx = side * rng.uniform(0.45, 0.55);
  const double cy = side * rng.uniform(0.45, 0.55);
  const double radius = side * 0.62;
  const double base = rng.uniform(0.55, 0.65);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = (x + 0.5 - cx) / radius, dy = (y + 0.5 - cy) / radius;
      const double fall = std::max(0.0, 1.0 - 0.6 * (dx * dx + dy * dy));
      const double noise = rng.uniform(-0.015, 0.015);
      img.at(x, y, 0) = std::clamp(base * fall + 0.1 + noise, 0.0, 1.0);
      img.at(x, y, 1) = std::clamp(0.55 * base * fall + 0.05 + noise, 0.0, 1.0);
      img.at(x, y, 2) = std::clamp(0.25 * base * fall + 0.03 + noise, 0.0, 1.0);
    }
  }
}

// Quadratic Bezier strokes from near the disc toward the border.
void paint_vessels(ImageTensor& img, SplitMix64& rng, const IntRange& count) {
  const double side = img.width;
  const int n = rng.between(count.lo, count.hi);
  const Rgb dark{0.25, 0.08, 0.05};
  for (int v = 0; v < n; ++v) {
    const double a0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double bend = rng.uniform(-0.6, 0.6);
    const double width = rng.uniform(1.2, 2.8);
    const double p0x = side * 0.5 + side * 0.05 * std::cos(a0), p0y = side * 0.5 + side * 0.05 * std::sin(a0);
    const double p2x = side * 0.5 + side * 0.6 * std::cos(a0), p2y = side * 0.5 + side * 0.6 * std::sin(a0);
    const double p1x = side * 0.5 + side * 0.35 * std::cos(a0 + bend);
    const double p1y = side * 0.5 + side * 0.35 * std::sin(a0 + bend);
    const int steps = static_cast<int>(side * 2);
    for (int s = 0; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps, u = 1.0 - t;
      const double x = u * u * p0x + 2 * u * t * p1x + t * t * p2x;
      const double y = u * u * p0y + 2 * u * t * p1y + t * t * p2y;
      const double w = width * (1.0 - 0.5 * t);
      const int r = static_cast<int>(std::ceil(w));
      for (int yy = static_cast<int>(y) - r; yy <= static_cast<int>(y) + r; ++yy) {
        for (int xx = static_cast<int>(x) - r; xx <= static_cast<int>(x) + r; ++xx) {
          const double d = std::hypot(xx + 0.5 - x, yy + 0.5 - y);
          if (d <= w) blend(img, xx, yy, dark, 0.12);
        }
      }
    }
  }
}

// Irregular bright blobs with hard edges.
void paint_exudates(ImageTensor& img, SplitMix64& rng, const SynthConfig& cfg) {
  const double side = img.width;
  const int n = rng.between(cfg.exudate_count.lo, cfg.exudate_count.hi);
  const double b = cfg.exudate_brightness;
  const Rgb color{b, 0.92 * b, 0.5 * b};
  for (int i = 0; i < n; ++i) {
    const double radius = rng.between(cfg.exudate_radius.lo, cfg.exudate_radius.hi);
    const double margin = radius * 1.3 + 12.0;
    const double cx = rng.uniform(margin, side - margin);
    const double cy = rng.uniform(margin, side - margin);
    const int lobes = rng.between(2, 5);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double wobble = rng.uniform(0.1, 0.3);
    const int reach = static_cast<int>(std::ceil(radius * (1.0 + wobble))) + 1;
    for (int y = static_cast<int>(cy) - reach; y <= static_cast<int>(cy) + reach; ++y) {
      for (int x = static_cast<int>(cx) - reach; x <= static_cast<int>(cx) + reach; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const double edge = radius * (1.0 + wobble * std::sin(lobes * std::atan2(dy, dx) + phase));
        if (std::hypot(dx, dy) <= edge) blend(img, x, y, color, 1.0);
      }
    }
  }
}

void paint_drusen(ImageTensor& img, SplitMix64& rng, const SynthConfig& cfg) {
  const double side = img.width;
  const int n = rng.between(cfg.drusen_count.lo, cfg.drusen_count.hi);
  const Rgb color{1.0, 0.95, 0.6};
  for (int i = 0; i < n; ++i) {
    const double radius = rng.between(cfg.drusen_radius.lo, cfg.drusen_radius.hi);
    const double cx = rng.uniform(8.0, side - 8.0);
    const double cy = rng.uniform(8.0, side - 8.0);
    const int reach = static_cast<int>(radius) + 1;
    for (int y = static_cast<int>(cy) - reach; y <= static_cast<int>(cy) + reach; ++y) {
      for (int x = static_cast<int>(cx) - reach; x <= static_cast<int>(cx) + reach; ++x) {
        if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= radius) {
          blend(img, x, y, color, cfg.drusen_brightness);
        }
      }
    }
  }
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.per_class < 1) throw Error(ErrorCode::kInvalidArgument, "per_class must be >= 1");
  if (cfg.size < 32) throw Error(ErrorCode::kInvalidArgument, "size must be >= 32");
  check_range(cfg.vessel_count, 0, "vessel count");
  check_range(cfg.exudate_count, 1, "exudate count");
  check_range(cfg.exudate_radius, 1, "exudate radius");
  check_range(cfg.drusen_count, 1, "drusen count");
  check_range(cfg.drusen_radius, 1, "drusen radius");
  if (cfg.exudate_radius.hi * 2.6 + 24.0 >= cfg.size) {
    throw Error(ErrorCode::kInvalidArgument, "exudate radius too large for image size");
  }
  for (double b : {cfg.exudate_brightness, cfg.drusen_brightness}) {
    if (!(b > 0.0 && b <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "brightness must be in (0, 1]");
  }
}

ImageTensor synth_image(const SynthConfig& cfg, ClassLabel label, std::size_t index) {
  SplitMix64 rng(cfg.seed ^ static_cast<std::uint64_t>(index));
  ImageTensor img(cfg.size, cfg.size, 3);
  paint_background(img, rng);
  switch (label) {
    case ClassLabel::kNormal: paint_vessels(img, rng, cfg.vessel_count); break;
    case ClassLabel::kExudates: paint_exudates(img, rng, cfg); break;
    case ClassLabel::kDrusen: paint_drusen(img, rng, cfg); break;
  }
  return img;
}

SynthCorpus generate(const SynthConfig& cfg) {
  validate(cfg);
  const std::size_t per = static_cast<std::size_t>(cfg.per_class);
  SynthCorpus out;
  out.images.resize(per * kNumClasses);
  for (ClassLabel c : kAllClasses) {
    for (std::size_t i = 0; i < per; ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "images/%s_%04zu.png", std::string(label_name(c)).c_str(), i);
      out.manifest.entries.push_back({name, c, "synthetic"});
    }
  }
  tbb::parallel_for(std::size_t{0}, out.images.size(), [&](std::size_t i) {
    out.images[i] = synth_image(cfg, out.manifest.entries[i].label, i);
  });
  return out;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const SynthCorpus& corpus) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (dir / "images").string() + ": " + ec.message());
  for (std::size_t i = 0; i < corpus.images.size(); ++i) {
    save_png(dir / corpus.manifest.entries[i].path, corpus.images[i]);
  }
  const auto manifest_path = dir / "manifest.csv";
  write_manifest(manifest_path, corpus.manifest);
  return manifest_path;
}

}  // namespace retina
