#include "retina/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include <tbb/parallel_for.h>

#include "retina/error.hpp"
#include "retina/rng.hpp"

namespace retina {
namespace {

constexpr std::array<Metric, 3> kMetrics = {Metric::kAcc, Metric::kSens, Metric::kSpec};

double metric_value(const ClassMetric& m, Metric which) {
  switch (which) {
    case Metric::kAcc: return m.acc;
    case Metric::kSens: return m.sens;
    case Metric::kSpec: return m.spec;
  }
  return 0.0;
}

std::string shortest(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string display_class(ClassLabel c) {
  switch (c) {
    case ClassLabel::kNormal: return "Norm";
    case ClassLabel::kExudates: return "Ex";
    case ClassLabel::kDrusen: return "Dru";
  }
  return "?";
}

bool any_undefined(const CvReport& r, ClassLabel c, Metric m) {
  for (const FoldResult& f : r.folds) {
    const ClassMetric& cm = f.metrics[c];
    if ((m == Metric::kSens && cm.sens_undefined) || (m == Metric::kSpec && cm.spec_undefined)) {
      return true;
    }
  }
  return false;
}

void grid_table(std::ostringstream& os, std::span<const CvReport* const> rows,
                const std::string& key_header, bool with_max) {
  os << "| " << key_header << " |";
  for (Metric m : kMetrics) {
    const char* name = m == Metric::kAcc ? "Acc" : m == Metric::kSens ? "Sens" : "Spec";
    for (ClassLabel c : kAllClasses) os << ' ' << name << ' ' << display_class(c) << " (%) |";
  }
  os << "\n|---|";
  for (int i = 0; i < 9; ++i) os << "---|";
  os << '\n';
  bool flagged = false;
  for (const CvReport* r : rows) {
    os << "| " << r->param << " |";
    for (Metric m : kMetrics) {
      for (ClassLabel c : kAllClasses) {
        os << ' ' << format_fixed2(r->summary(c, m).mean);
        if (any_undefined(*r, c, m)) {
          os << '*';
          flagged = true;
        }
        os << " |";
      }
    }
    os << '\n';
  }
  if (with_max && rows.size() > 1) {
    os << "| Max |";
    for (Metric m : kMetrics) {
      for (ClassLabel c : kAllClasses) {
        double best = -std::numeric_limits<double>::infinity();
        for (const CvReport* r : rows) best = std::max(best, r->summary(c, m).mean);
        os << ' ' << format_fixed2(best) << " |";
      }
    }
    os << '\n';
  }
  if (flagged) os << "\n\\* undefined in at least one fold (class absent); counted as 0.\n";
}

}  // namespace

std::vector<std::size_t> FoldAssignment::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldAssignment stratified_kfold(std::span<const ClassLabel> labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kBadK, "k must be >= 2, got " + std::to_string(k));
  if (labels.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooFewSamples,
                std::to_string(labels.size()) + " samples for " + std::to_string(k) + " folds");
  }
  FoldAssignment fa;
  fa.k = k;
  fa.seed = seed;
  fa.fold_of.assign(labels.size(), -1);
  SplitMix64 rng(seed);
  std::size_t deal = 0;
  for (ClassLabel c : kAllClasses) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    // Fisher-Yates.
    for (std::size_t i = members.size(); i > 1; --i) {
      std::swap(members[i - 1], members[rng.below(i)]);
    }
    for (std::size_t idx : members) fa.fold_of[idx] = static_cast<int>(deal++ % k);
  }
  return fa;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) {
    for (std::size_t v : row) t += v;
  }
  return t;
}

std::size_t ConfusionMatrix::correct() const {
  return counts[0][0] + counts[1][1] + counts[2][2];
}

ConfusionMatrix confusion(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
  if (truth.size() != predicted.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(truth.size()) + " truths vs " + std::to_string(predicted.size()) +
                    " predictions");
  }
  if (truth.empty()) throw Error(ErrorCode::kLengthMismatch, "no samples");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) ++cm.counts[index_of(truth[i])][index_of(predicted[i])];
  return cm;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix is empty");
  ClassMetrics out;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::size_t tp = cm.counts[c][c], fn = 0, fp = 0;
    for (std::size_t o = 0; o < kNumClasses; ++o) {
      if (o == c) continue;
      fn += cm.counts[c][o];
      fp += cm.counts[o][c];
    }
    const std::size_t tn = n - tp - fn - fp;
    ClassMetric& m = out.per_class[c];
    m.acc = 100.0 * static_cast<double>(tp + tn) / static_cast<double>(n);
    if (tp + fn == 0) {
      m.sens_undefined = true;
    } else {
      m.sens = 100.0 * static_cast<double>(tp) / static_cast<double>(tp + fn);
    }
    if (tn + fp == 0) {
      m.spec_undefined = true;
    } else {
      m.spec = 100.0 * static_cast<double>(tn) / static_cast<double>(tn + fp);
    }
  }
  return out;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const std::size_t n = cm.total();
  if (n == 0) throw Error(ErrorCode::kEmptyMatrix, "confusion matrix is empty");
  return 100.0 * static_cast<double>(cm.correct()) / static_cast<double>(n);
}

Summary mean_and_sample_std(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return s;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return s;
}

void CvReport::summarize() {
  std::vector<double> vals(folds.size());
  for (ClassLabel c : kAllClasses) {
    for (Metric m : kMetrics) {
      for (std::size_t f = 0; f < folds.size(); ++f) vals[f] = metric_value(folds[f].metrics[c], m);
      per_class[index_of(c)][static_cast<std::size_t>(m)] = mean_and_sample_std(vals);
    }
  }
  for (std::size_t f = 0; f < folds.size(); ++f) vals[f] = folds[f].overall;
  overall = mean_and_sample_std(vals);
  flagged_folds = 0;
  for (const FoldResult& f : folds) {
    const bool flagged = std::any_of(f.metrics.per_class.begin(), f.metrics.per_class.end(),
                                     [](const ClassMetric& m) { return m.sens_undefined || m.spec_undefined; });
    flagged_folds += flagged ? 1 : 0;
  }
}

CvReport run_cv(std::span<const ClassLabel> labels, const FoldAssignment& folds,
                const FoldRunner& runner) {
  if (folds.fold_of.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, "fold assignment does not match labels");
  }
  CvReport report;
  report.k = folds.k;
  report.seed = folds.seed;
  report.folds.resize(static_cast<std::size_t>(folds.k));
  tbb::parallel_for(0, folds.k, [&](int f) {
    const auto train = folds.train_indices(f);
    const auto test = folds.test_indices(f);
    const std::vector<ClassLabel> predicted = runner(f, train, test);
    if (predicted.size() != test.size()) {
      throw Error(ErrorCode::kLengthMismatch, "runner returned wrong number of predictions");
    }
    std::vector<ClassLabel> truth;
    truth.reserve(test.size());
    for (std::size_t i : test) truth.push_back(labels[i]);
    FoldResult& out = report.folds[static_cast<std::size_t>(f)];
    out.cm = confusion(truth, predicted);
    out.metrics = class_metrics(out.cm);
    out.overall = overall_accuracy(out.cm);
  });
  report.summarize();
  return report;
}

CvReport run_cv_features(std::span<const FeatureVector> features,
                         std::span<const ClassLabel> labels, int k, const SvmConfig& svm,
                         std::uint64_t seed) {
  if (features.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "features vs labels");
  if (features.empty()) throw Error(ErrorCode::kEmptyInput, "no features");
  const FoldAssignment folds = stratified_kfold(labels, k, seed);
  CvReport report = run_cv(labels, folds, [&](int, std::span<const std::size_t> train,
                                              std::span<const std::size_t> test) {
    std::vector<Sample> xs;
    std::vector<ClassLabel> ys;
    for (std::size_t i : train) {
      xs.emplace_back(features[i].values);
      ys.push_back(labels[i]);
    }
    const MultiClassSvmModel model = train_multiclass(std::span<const Sample>(xs), ys, svm);
    std::vector<ClassLabel> pred;
    for (std::size_t i : test) pred.push_back(predict(model, features[i].values));
    return pred;
  });
  report.pipeline = features.front().kind == FeatureKind::kBovwHistogram ? "bovw" : "deep";
  report.param = features.front().model_id;
  return report;
}

CvReport run_cv_bovw(std::span<const DescriptorSet> sets, std::span<const ClassLabel> labels,
                     int k, std::uint64_t fold_seed, const BovwCvOptions& opts) {
  if (sets.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "descriptor sets vs labels");
  if (sets.empty()) throw Error(ErrorCode::kEmptyInput, "no images");
  const FoldAssignment folds = stratified_kfold(labels, k, fold_seed);
  CvReport report = run_cv(labels, folds, [&](int fold, std::span<const std::size_t> train,
                                              std::span<const std::size_t> test) {
    std::vector<const DescriptorSet*> train_sets;
    for (std::size_t i : train) train_sets.push_back(&sets[i]);
    const DescriptorMatrix fit_input = stack_descriptors(train_sets);
    if (opts.on_codebook_input) opts.on_codebook_input(fold, fit_input);
    const Codebook cb = kmeans_fit(fit_input, opts.codebook);

    std::vector<FeatureVector> train_fv;
    std::vector<ClassLabel> train_y;
    for (std::size_t i : train) {
      train_fv.push_back(encode_histogram(sets[i], cb));
      train_y.push_back(labels[i]);
    }
    const MultiClassSvmModel model = train_multiclass(std::span<const FeatureVector>(train_fv), train_y, opts.svm);
    std::vector<ClassLabel> pred;
    for (std::size_t i : test) pred.push_back(predict(model, encode_histogram(sets[i], cb).values));
    return pred;
  });
  report.pipeline = "bovw";
  report.param = std::to_string(opts.codebook.words);
  return report;
}

std::string format_fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string render_report(std::span<const CvReport> reports, ReportFormat format) {
  if (reports.empty()) throw Error(ErrorCode::kEmptyInput, "no reports to render");
  std::ostringstream os;
  if (format == ReportFormat::kCsv) {
    os << "pipeline,param,class,acc,sens,spec,fold\n";
    auto row = [&](const CvReport& r, std::string_view cls, double acc, const std::string& sens,
                   const std::string& spec, const std::string& fold) {
      os << r.pipeline << ',' << r.param << ',' << cls << ',' << shortest(acc) << ',' << sens << ','
         << spec << ',' << fold << '\n';
    };
    for (const CvReport& r : reports) {
      for (std::size_t f = 0; f < r.folds.size(); ++f) {
        const FoldResult& fr = r.folds[f];
        for (ClassLabel c : kAllClasses) {
          const ClassMetric& m = fr.metrics[c];
          row(r, label_name(c), m.acc, shortest(m.sens), shortest(m.spec), std::to_string(f));
        }
        row(r, "overall", fr.overall, "", "", std::to_string(f));
      }
      for (int which = 0; which < 2; ++which) {
        auto pick = [&](const Summary& s) { return which == 0 ? s.mean : s.stddev; };
        const std::string tag = which == 0 ? "mean" : "std";
        for (ClassLabel c : kAllClasses) {
          row(r, label_name(c), pick(r.summary(c, Metric::kAcc)),
              shortest(pick(r.summary(c, Metric::kSens))), shortest(pick(r.summary(c, Metric::kSpec))),
              tag);
        }
        row(r, "overall", pick(r.overall), "", "", tag);
      }
    }
    return os.str();
  }

  std::vector<const CvReport*> bovw, deep;
  for (const CvReport& r : reports) (r.pipeline == "bovw" ? bovw : deep).push_back(&r);
  if (!bovw.empty()) {
    os << "## BoVW: mean per-class metrics over folds\n\n";
    grid_table(os, bovw, "W", true);
    os << '\n';
  }
  if (!deep.empty()) {
    os << "## Deep features: mean per-class metrics over folds\n\n";
    grid_table(os, deep, "Model", false);
    os << '\n';
  }
  os << "## Overall accuracy (mean ± std over folds)\n\n|  |";
  for (const CvReport& r : reports) {
    if (r.pipeline == "bovw") {
      os << (bovw.size() == 1 ? std::string(" BoVW |") : " BoVW W=" + r.param + " |");
    } else {
      os << ' ' << r.param << " |";
    }
  }
  os << "\n|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) os << "---|";
  os << "\n| Accuracy |";
  for (const CvReport& r : reports) {
    os << ' ' << format_fixed2(r.overall.mean) << " ± " << format_fixed2(r.overall.stddev) << " |";
  }
  os << "\n\n";
  for (const CvReport& r : reports) {
    if (r.folds.empty()) continue;
    os << "- " << r.pipeline << ' ' << r.param << ": " << r.k << "-fold stratified CV, seed "
       << r.seed;
    if (r.flagged_folds > 0) os << ", " << r.flagged_folds << " fold(s) with undefined metrics";
    os << '\n';
  }
  return os.str();
}

std::vector<CvReport> parse_report_csv(std::string_view csv) {
  std::vector<CvReport> reports;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    return Error(ErrorCode::kMalformedRow, "report line " + std::to_string(line_no) + ": " + why);
  };
  auto number = [&](const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw fail("bad number '" + s + "'");
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "pipeline,param,class,acc,sens,spec,fold") throw fail("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw fail("expected 7 fields");

    const auto key = std::make_pair(f[0], f[1]);
    auto [it, inserted] = index.emplace(key, reports.size());
    if (inserted) {
      reports.emplace_back();
      reports.back().pipeline = f[0];
      reports.back().param = f[1];
    }
    CvReport& r = reports[it->second];
    const bool overall = f[2] == "overall";
    std::optional<ClassLabel> cls;
    if (!overall) {
      cls = parse_label(f[2]);
      if (!cls) throw fail("unknown class '" + f[2] + "'");
    }
    const double acc = number(f[3]);
    if (f[6] == "mean" || f[6] == "std") {
      const bool mean = f[6] == "mean";
      auto set = [&](Summary& s, double v) { (mean ? s.mean : s.stddev) = v; };
      if (overall) {
        set(r.overall, acc);
      } else {
        auto& row = r.per_class[index_of(*cls)];
        set(row[0], acc);
        set(row[1], number(f[4]));
        set(row[2], number(f[5]));
      }
      continue;
    }
    int fold = 0;
    auto [p, ec] = std::from_chars(f[6].data(), f[6].data() + f[6].size(), fold);
    if (ec != std::errc() || p != f[6].data() + f[6].size() || fold < 0) throw fail("bad fold");
    if (static_cast<std::size_t>(fold) >= r.folds.size()) r.folds.resize(static_cast<std::size_t>(fold) + 1);
    r.k = static_cast<int>(r.folds.size());
    FoldResult& fr = r.folds[static_cast<std::size_t>(fold)];
    if (overall) {
      fr.overall = acc;
    } else {
      ClassMetric& m = fr.metrics.per_class[index_of(*cls)];
      m.acc = acc;
      m.sens = number(f[4]);
      m.spec = number(f[5]);
    }
  }
  return reports;
}

}  // namespace retina
