#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "retina/dataset.hpp"
#include "retina/feature.hpp"

namespace retina {

enum class KernelType : std::uint8_t { kLinear = 0, kRbf = 1 };

struct Kernel {
  KernelType type = KernelType::kLinear;
  // RBF width. 0 means "1 / dim", resolved when training.
  double gamma = 0.0;

  static Kernel linear() { return {}; }
  static Kernel rbf(double gamma = 0.0) { return {KernelType::kRbf, gamma}; }
};

// Linear: <x, y>.  RBF: exp(-gamma * |x - y|^2).
double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y);

struct SvmConfig {
  double C = 8.0;
  Kernel kernel;
  double kkt_tolerance = 1e-3;
  long max_passes = 10'000'000;
};

struct BinarySvmModel {
  Kernel kernel;  // gamma always resolved
  std::size_t dim = 0;
  std::vector<double> support;  // nsv * dim, row-major
  std::vector<double> coef;     // alpha_i * y_i per support vector
  std::vector<std::size_t> support_indices;  // training row of each SV (empty after load)
  double bias = 0.0;
  long iterations = 0;
  bool converged = true;  // false: max_passes hit, model is the best iterate

  std::size_t support_count() const { return coef.size(); }
  double decision(std::span<const double> x) const;
};

// Optional instrumentation: dual objective after every SMO step.
struct SmoTrace {
  std::vector<double> dual_objective;
};

using Sample = std::span<const double>;

// SMO on the C-SVM dual with maximal-violating-pair working sets. Labels
// are +1 / -1. Stops when the KKT gap is below kkt_tolerance or after
// max_passes steps (converged = false).
BinarySvmModel train_binary(std::span<const Sample> x, std::span<const int> y,
                            const SvmConfig& cfg, SmoTrace* trace = nullptr);

// One-vs-one over the three classes. Pair p = (first, second) uses +1 for
// `first`; pairs are ordered (Normal,Exudates), (Normal,Drusen),
// (Exudates,Drusen).
struct MultiClassSvmModel {
  static constexpr std::array<std::array<ClassLabel, 2>, 3> kPairs = {{
      {ClassLabel::kNormal, ClassLabel::kExudates},
      {ClassLabel::kNormal, ClassLabel::kDrusen},
      {ClassLabel::kExudates, ClassLabel::kDrusen},
  }};
  std::array<BinarySvmModel, 3> pairs;
  std::size_t dim = 0;
};

MultiClassSvmModel train_multiclass(std::span<const Sample> x, std::span<const ClassLabel> labels,
                                    const SvmConfig& cfg);
MultiClassSvmModel train_multiclass(std::span<const FeatureVector> x,
                                    std::span<const ClassLabel> labels, const SvmConfig& cfg);

std::array<double, 3> pairwise_decisions(const MultiClassSvmModel& m, std::span<const double> x);
// Majority vote; ties go to the class with the larger summed |decision| over
// the votes it won, then to the lower ordinal.
ClassLabel vote(const std::array<double, 3>& decisions);
ClassLabel predict(const MultiClassSvmModel& m, std::span<const double> x);

// "RSM1", u32 dim, u8 kernel, f32 gamma, then per pair: u8 pos, u8 neg,
// f32 bias, u32 nsv, nsv x (f32 coef, dim x f32). Values are stored as
// float32, so a loaded model equals the saved one rounded to float.
void save_model(const std::filesystem::path& path, const MultiClassSvmModel& m);
MultiClassSvmModel load_model(const std::filesystem::path& path);

}  // namespace retina
