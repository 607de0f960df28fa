#include <cstdlib>
#include <fstream>
#include <iterator>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "retina/deepfeat.hpp"
#include "retina/eval.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "retina");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  ::testing::internal::CaptureStdout();
  ::testing::internal::CaptureStderr();
  const int code = retina::cli::run(static_cast<int>(argv.size()), argv.data());
  std::string out = ::testing::internal::GetCapturedStdout();
  std::string err = ::testing::internal::GetCapturedStderr();
  return {code, std::move(out), std::move(err)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliCorpus : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir();
    const Result r = run({"synth", "--out", (*dir_ / "corpus").string(), "--per-class", "8", "--size", "96",
                          "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static std::string manifest() { return (*dir_ / "corpus" / "manifest.csv").string(); }
  static TempDir* dir_;
};
TempDir* CliCorpus::dir_ = nullptr;

TEST_F(CliCorpus, AuditPrintsClassTotals) {
  const Result r = run({"audit", "--manifest", manifest()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("| Normal | 8 | 8 |"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("| Total | 24 | 24 |"), std::string::npos) << r.out;
}

TEST_F(CliCorpus, DeepEvalWritesIdenticalReportsTwice) {
  TempDir out;
  std::vector<std::string> args{"eval", "--pipeline", "deep", "--backend", "mock:42:1024", "--manifest",
                                manifest(), "--folds", "4", "--out", out.path().string()};
  auto first = args;
  first.insert(first.end(), {"--experiment", "a"});
  auto second = args;
  second.insert(second.end(), {"--experiment", "b", "--jobs", "1"});
  const Result ra = run(first);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(run(second).code, 0);
  EXPECT_EQ(slurp(out / "a.md"), slurp(out / "b.md"));
  EXPECT_EQ(slurp(out / "a.csv"), slurp(out / "b.csv"));
  const auto reports = retina::parse_report_csv(slurp(out / "a.csv"));
  ASSERT_EQ(reports.size(), 1u);
  EXPECT_EQ(reports[0].pipeline, "deep");
  EXPECT_EQ(reports[0].param, "mock:42:1024");
  EXPECT_EQ(reports[0].folds.size(), 4u);
  EXPECT_NE(ra.out.find("| Accuracy |"), std::string::npos);
}

TEST_F(CliCorpus, BovwWordSweepGivesOneReportPerSize) {
  TempDir out;
  const Result r = run({"eval", "--manifest", manifest(), "--words", "8,16", "--folds", "3", "--out",
                        out.path().string(), "--experiment", "sweep"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto reports = retina::parse_report_csv(slurp(out / "sweep.csv"));
  ASSERT_EQ(reports.size(), 2u);
  EXPECT_EQ(reports[0].param, "8");
  EXPECT_EQ(reports[1].param, "16");
  EXPECT_NE(r.out.find("| Max |"), std::string::npos);
  EXPECT_NE(r.out.find("BoVW W=16"), std::string::npos);
}

TEST_F(CliCorpus, ExtractThenEvalFeaturesThenReport) {
  TempDir out;
  const std::string rfv = (out / "mockfeat.rfv").string();
  Result r = run({"extract", "--pipeline", "deep", "--backend", "mock:1:64", "--manifest", manifest(), "--out", rfv});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto records = retina::read_features(rfv);
  ASSERT_EQ(records.size(), 24u);
  EXPECT_EQ(records[0].vector.dim(), 64u);

  r = run({"extract", "--manifest", manifest(), "--words", "12", "--out", (out / "bovw.rfv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(retina::read_features(out / "bovw.rfv")[5].vector.dim(), 12u);

  r = run({"eval", "--pipeline", "deep", "--features", rfv, "--folds", "4", "--out", out.path().string()});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"report", (out / "deep.csv").string(), (out / "deep.csv").string(), "--out",
           (out / "combined.md").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string md = slurp(out / "combined.md");
  EXPECT_NE(md.find("| mockfeat |"), std::string::npos) << md;
  r = run({"report", (out / "deep.csv").string(), "--format", "csv"});
  EXPECT_EQ(r.out, slurp(out / "deep.csv"));
}

TEST_F(CliCorpus, DeepFeaturesAreCached) {
  TempDir cache, out;
  ::setenv("RETINA_BENCH_CACHE", cache.path().string().c_str(), 1);
  const std::vector<std::string> args{"eval", "--pipeline", "deep", "--backend", "mock:5:32", "--manifest",
                                      manifest(), "--folds", "3", "--out", out.path().string()};
  const Result a = run(args);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(cache.path())) ++files;
  const Result b = run(args);
  ::unsetenv("RETINA_BENCH_CACHE");
  ASSERT_EQ(a.code, 0) << a.err;
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(files, 1u);
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run({"eval", "--no-such-flag"}).code, 2);
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"synth"}).code, 2);  // --out is required
  EXPECT_EQ(run({"eval", "--kernel", "poly"}).code, 2);
  EXPECT_EQ(run({"eval", "--folds", "1"}).code, 2);
  EXPECT_EQ(run({"eval", "--help"}).code, 0);
}

TEST(Cli, HelpListsFlags) {
  const Result r = run({"eval", "--help"});
  for (const char* flag : {"--manifest", "--features", "--words", "--folds", "--C", "--kernel", "--gamma", "--out",
                           "--experiment", "--pipeline", "--backend", "--threshold", "--seed"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, RuntimeErrorsExitOneWithOneLine) {
  TempDir tmp;
  std::ofstream(tmp / "bad.csv") << "path,label,source\nx.png,glaucoma,somewhere\n";
  const Result r = run({"audit", "--manifest", (tmp / "bad.csv").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
  EXPECT_EQ(run({"eval", "--pipeline", "deep", "--backend", "nonsense", "--manifest", (tmp / "bad.csv").string()}).code, 1);
}

TEST(Cli, SeedFanOut) {
  EXPECT_EQ(retina::cli::fold_seed(1), 1u);
  EXPECT_EQ(retina::cli::kmeans_seed(1), 2u);
  EXPECT_EQ(retina::cli::synth_seed(1), 3u);
  EXPECT_EQ(retina::cli::fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(retina::cli::fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

}  // namespace
