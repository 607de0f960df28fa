#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <tbb/global_control.h>
#include <tbb/info.h>
#include <tbb/parallel_for.h>

#include "retina/bovw.hpp"
#include "retina/dataset.hpp"
#include "retina/deepfeat.hpp"
#include "retina/descriptors.hpp"
#include "retina/error.hpp"
#include "retina/eval.hpp"
#include "retina/image.hpp"
#include "retina/svm.hpp"
#include "retina/synthgen.hpp"

namespace fs = std::filesystem;

namespace retina::cli {
namespace {

struct Options {
  int jobs = 0;
  std::uint64_t seed = 1;

  // synth
  fs::path synth_out;
  int per_class = 10;
  int size = 224;

  fs::path manifest;
  std::string pipeline = "bovw";
  std::vector<std::size_t> words{200};
  std::string backend = "mock:42:1024";
  double threshold = kDefaultSurfThreshold;

  fs::path features_out;

  // eval
  fs::path features_in;
  int folds = 10;
  double C = 8.0;
  std::string kernel;  // empty: linear for bovw, rbf for deep
  double gamma = 0.0;
  fs::path out_dir = ".";
  std::string experiment;

  // report
  std::vector<fs::path> inputs;
  std::string format = "md";
  fs::path report_out;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  os << text;
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<DescriptorSet> bovw_descriptors(const DatasetManifest& m, double threshold) {
  std::vector<DescriptorSet> sets(m.entries.size());
  ExtractOptions opts;
  opts.surf_threshold = threshold;
  tbb::parallel_for(std::size_t{0}, sets.size(), [&](std::size_t i) {
    sets[i] = extract_all(preprocess_for_bovw(load_image(m.resolve(m.entries[i]))), opts);
  });
  return sets;
}

std::vector<FeatureVector> deep_features(const DatasetManifest& m, const std::string& spec) {
  const auto backend = make_backend(spec);
  fs::path cached;
  if (const fs::path dir = cache_dir(); !dir.empty()) {
    std::uint64_t h = fnv1a(spec);
    for (const auto& e : m.entries) h = fnv1a(m.resolve(e).lexically_normal().string() + '\n', h);
    char name[40];
    std::snprintf(name, sizeof name, "deep-%016llx.rfv", static_cast<unsigned long long>(h));
    cached = dir / name;
  }
  std::vector<FeatureVector> out;
  if (!cached.empty() && fs::exists(cached)) {
    auto records = read_features(cached);
    if (records.size() == m.entries.size()) {
      for (auto& r : records) {
        r.vector.model_id = backend->model_id();
        out.push_back(std::move(r.vector));
      }
      return out;
    }
  }
  out.resize(m.entries.size());
  tbb::parallel_for(std::size_t{0}, out.size(), [&](std::size_t i) {
    const ImageTensor img = load_image(m.resolve(m.entries[i]));
    out[i] = extract_deep(resize_bilinear(img, kNetworkInputSide, kNetworkInputSide), *backend);
  });
  if (!cached.empty()) {
    fs::create_directories(cached.parent_path());
    std::vector<FeatureRecord> records;
    for (std::size_t i = 0; i < out.size(); ++i) records.push_back({m.entries[i].label, out[i]});
    write_features(cached, records);
  }
  return out;
}

SvmConfig svm_config(const Options& o) {
  SvmConfig cfg;
  cfg.C = o.C;
  const std::string kernel = o.kernel.empty() ? (o.pipeline == "deep" ? "rbf" : "linear") : o.kernel;
  cfg.kernel = kernel == "rbf" ? Kernel::rbf(o.gamma) : Kernel::linear();
  return cfg;
}

int cmd_synth(const Options& o) {
  SynthConfig cfg;
  cfg.per_class = o.per_class;
  cfg.size = o.size;
  cfg.seed = synth_seed(o.seed);
  const fs::path manifest = write_corpus(o.synth_out, generate(cfg));
  std::cout << "wrote " << 3 * o.per_class << " images, manifest " << manifest.string() << '\n';
  return 0;
}

int cmd_audit(const Options& o) {
  std::cout << render_distribution(audit_distribution(load_manifest(o.manifest)));
  return 0;
}

int cmd_extract(const Options& o) {
  const DatasetManifest m = load_manifest(o.manifest);
  std::vector<FeatureRecord> records;
  if (o.pipeline == "bovw") {
    if (o.words.size() != 1) throw Error(ErrorCode::kInvalidArgument, "extract takes a single --words value");
    const auto sets = bovw_descriptors(m, o.threshold);
    std::vector<const DescriptorSet*> ptrs;
    for (const auto& s : sets) ptrs.push_back(&s);
    CodebookConfig cb_cfg;
    cb_cfg.words = o.words.front();
    cb_cfg.seed = kmeans_seed(o.seed);
    const Codebook cb = kmeans_fit(stack_descriptors(ptrs), cb_cfg);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      records.push_back({m.entries[i].label, encode_histogram(sets[i], cb)});
    }
  } else {
    const auto feats = deep_features(m, o.backend);
    for (std::size_t i = 0; i < feats.size(); ++i) records.push_back({m.entries[i].label, feats[i]});
  }
  write_features(o.features_out, records);
  std::cout << "wrote " << records.size() << " feature vectors to " << o.features_out.string() << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  std::vector<CvReport> reports;
  const SvmConfig svm = svm_config(o);
  if (o.pipeline == "bovw") {
    if (o.manifest.empty()) throw Error(ErrorCode::kInvalidArgument, "bovw pipeline needs --manifest");
    const DatasetManifest m = load_manifest(o.manifest);
    const auto labels = m.labels();
    const auto sets = bovw_descriptors(m, o.threshold);
    for (std::size_t w : o.words) {
      BovwCvOptions opts;
      opts.codebook.words = w;
      opts.codebook.seed = kmeans_seed(o.seed);
      opts.svm = svm;
      reports.push_back(run_cv_bovw(sets, labels, o.folds, fold_seed(o.seed), opts));
    }
  } else {
    std::vector<FeatureVector> feats;
    std::vector<ClassLabel> labels;
    if (!o.features_in.empty()) {
      for (auto& r : read_features(o.features_in)) {
        r.vector.model_id = o.features_in.stem().string();
        labels.push_back(r.label);
        feats.push_back(std::move(r.vector));
      }
    } else {
      if (o.manifest.empty()) throw Error(ErrorCode::kInvalidArgument, "deep pipeline needs --manifest or --features");
      const DatasetManifest m = load_manifest(o.manifest);
      labels = m.labels();
      feats = deep_features(m, o.backend);
    }
    reports.push_back(run_cv_features(feats, labels, o.folds, svm, fold_seed(o.seed)));
  }
  const std::string name = o.experiment.empty() ? o.pipeline : o.experiment;
  const fs::path md = o.out_dir / (name + ".md");
  const fs::path csv = o.out_dir / (name + ".csv");
  const std::string text = render_report(reports, ReportFormat::kMarkdown);
  write_text(md, text);
  write_text(csv, render_report(reports, ReportFormat::kCsv));
  std::cout << text << "wrote " << md.string() << " and " << csv.string() << '\n';
  return 0;
}

int cmd_report(const Options& o) {
  std::vector<CvReport> reports;
  for (const fs::path& p : o.inputs) {
    for (CvReport& r : parse_report_csv(read_text(p))) reports.push_back(std::move(r));
  }
  const std::string text =
      render_report(reports, o.format == "csv" ? ReportFormat::kCsv : ReportFormat::kMarkdown);
  if (o.report_out.empty()) {
    std::cout << text;
  } else {
    write_text(o.report_out, text);
  }
  return 0;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

fs::path cache_dir() {
  const char* env = std::getenv("RETINA_BENCH_CACHE");
  return env ? fs::path(env) : fs::path();
}

int run(int argc, char** argv) {
  Options o;
  CLI::App app{"Retinal lesion classification benchmark: BoVW and deep-feature pipelines"};
  app.require_subcommand(1);
  app.fallthrough();  // accept --jobs after the subcommand too
  app.add_option("--jobs,-j", o.jobs, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  const auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed,
                    "Master seed; folds use seed, k-means seed+1, synthesis seed+2")
        ->capture_default_str();
  };

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic three-class corpus");
  synth->add_option("--out", o.synth_out, "Output directory")->required();
  synth->add_option("--per-class", o.per_class, "Images per class")->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--size", o.size, "Image side in pixels")->check(CLI::Range(32, 4096))->capture_default_str();
  add_seed(synth);

  CLI::App* audit = app.add_subcommand("audit", "Print the per-source class distribution of a manifest");
  audit->add_option("--manifest", o.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);

  const auto add_pipeline = [&](CLI::App* sub) {
    sub->add_option("--pipeline", o.pipeline, "bovw or deep")
        ->check(CLI::IsMember({"bovw", "deep"}))
        ->capture_default_str();
    sub->add_option("--backend", o.backend, "Deep backend: mock:SEED:DIM or onnx:PATH[:LAYER]")
        ->capture_default_str();
    sub->add_option("--threshold", o.threshold, "SURF Hessian threshold")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };

  CLI::App* extract = app.add_subcommand("extract", "Write per-image feature vectors (RFV1)");
  extract->add_option("--manifest", o.manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", o.features_out, "Output feature file")->required();
  extract->add_option("--words", o.words, "Codebook size for bovw")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  add_pipeline(extract);
  add_seed(extract);

  CLI::App* eval = app.add_subcommand("eval", "Run stratified k-fold cross-validation and write reports");
  eval->add_option("--manifest", o.manifest, "Manifest CSV")->check(CLI::ExistingFile);
  eval->add_option("--features", o.features_in, "Precomputed RFV1 features (deep pipeline)")
      ->check(CLI::ExistingFile);
  eval->add_option("--words", o.words, "Comma-separated codebook sizes, one report each")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  eval->add_option("--folds", o.folds, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
  eval->add_option("--C", o.C, "SVM box constraint")->check(CLI::PositiveNumber)->capture_default_str();
  eval->add_option("--kernel", o.kernel, "linear or rbf (default: linear for bovw, rbf for deep)")
      ->check(CLI::IsMember({"linear", "rbf"}));
  eval->add_option("--gamma", o.gamma, "RBF gamma; 0 means 1/dim")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  eval->add_option("--out", o.out_dir, "Report directory")->capture_default_str();
  eval->add_option("--experiment", o.experiment, "Report base name (default: pipeline name)");
  add_pipeline(eval);
  add_seed(eval);

  CLI::App* report = app.add_subcommand("report", "Render combined tables from report CSVs");
  report->add_option("inputs", o.inputs, "Report CSV files")->required()->check(CLI::ExistingFile);
  report->add_option("--format", o.format, "md or csv")
      ->check(CLI::IsMember({"md", "csv"}))
      ->capture_default_str();
  report->add_option("--out", o.report_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::unique_ptr<tbb::global_control> limit;
  if (o.jobs > 0) {
    limit = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                  static_cast<std::size_t>(o.jobs));
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*audit) return cmd_audit(o);
    if (*extract) return cmd_extract(o);
    if (*eval) return cmd_eval(o);
    return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace retina::cli
