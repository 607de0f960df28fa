#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retina/bovw.hpp"
#include "retina/dataset.hpp"
#include "retina/feature.hpp"
#include "retina/svm.hpp"

namespace retina {

struct FoldAssignment {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<int> fold_of;  // per sample

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
};

// Per class (in ordinal order, one shared SplitMix64 stream): shuffle, then
// deal round-robin. Each class continues the deal where the previous class
// stopped, so total fold sizes also differ by at most one.
FoldAssignment stratified_kfold(std::span<const ClassLabel> labels, int k, std::uint64_t seed);

struct ConfusionMatrix {
  // counts[truth][predicted]
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  std::size_t total() const;
  std::size_t correct() const;
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted);

// One-vs-rest percentages for a single class. An undefined ratio (class
// absent from the truth, or every sample in the class) is reported as 0 and
// flagged.
struct ClassMetric {
  double acc = 0.0;
  double sens = 0.0;
  double spec = 0.0;
  bool sens_undefined = false;
  bool spec_undefined = false;
};

struct ClassMetrics {
  std::array<ClassMetric, kNumClasses> per_class{};
  const ClassMetric& operator[](ClassLabel c) const { return per_class[index_of(c)]; }
};

ClassMetrics class_metrics(const ConfusionMatrix& cm);
double overall_accuracy(const ConfusionMatrix& cm);

enum class Metric { kAcc = 0, kSens = 1, kSpec = 2 };

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) standard deviation
};

struct FoldResult {
  ConfusionMatrix cm;
  ClassMetrics metrics;
  double overall = 0.0;
};

struct CvReport {
  std::string pipeline;  // "bovw" or "deep"
  std::string param;     // visual words W, or backend/model id
  std::uint64_t seed = 0;
  int k = 0;
  std::vector<FoldResult> folds;
  std::array<std::array<Summary, 3>, kNumClasses> per_class{};  // [class][Metric]
  Summary overall;
  int flagged_folds = 0;  // folds with at least one undefined metric

  const Summary& summary(ClassLabel c, Metric m) const {
    return per_class[index_of(c)][static_cast<std::size_t>(m)];
  }
  // Recomputes per_class, overall and flagged_folds from folds.
  void summarize();
};

Summary mean_and_sample_std(std::span<const double> values);

// Fits on the training indices and returns a prediction per test index.
using FoldRunner = std::function<std::vector<ClassLabel>(
    int fold, std::span<const std::size_t> train, std::span<const std::size_t> test)>;

// Runs every fold (in parallel) and aggregates in fold order.
CvReport run_cv(std::span<const ClassLabel> labels, const FoldAssignment& folds,
                const FoldRunner& runner);

// Precomputed feature vectors (deep pipeline): features are training-free,
// so they are shared across folds.
CvReport run_cv_features(std::span<const FeatureVector> features,
                         std::span<const ClassLabel> labels, int k, const SvmConfig& svm,
                         std::uint64_t seed);

struct BovwCvOptions {
  CodebookConfig codebook;
  SvmConfig svm;
  // Observes the exact matrix handed to kmeans_fit for each fold. May be
  // called from several threads.
  std::function<void(int fold, const DescriptorMatrix&)> on_codebook_input;
};

// Refits the codebook per fold on training-image descriptors only, encodes
// every image against it and trains a linear SVM on the training images.
CvReport run_cv_bovw(std::span<const DescriptorSet> sets, std::span<const ClassLabel> labels,
                     int k, std::uint64_t fold_seed, const BovwCvOptions& opts);

enum class ReportFormat { kMarkdown, kCsv };

// Markdown: a per-class grid for BoVW reports (one row per W, plus a Max
// row), a per-class grid for deep reports (one row per model) and an
// overall "mean ± std" accuracy line. CSV: columns
// pipeline,param,class,acc,sens,spec,fold with fold = index, mean or std.
std::string render_report(std::span<const CvReport> reports, ReportFormat format);

// Inverse of the CSV rendering (folds carry metrics only, no matrices).
std::vector<CvReport> parse_report_csv(std::string_view csv);

std::string format_fixed2(double v);

}  // namespace retina
