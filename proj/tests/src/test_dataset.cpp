#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "retina/dataset.hpp"
#include "retina/rng.hpp"
#include "test_util.hpp"

namespace retina {
namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

// The published per-source counts for the clinical corpus.
DatasetManifest reference_corpus() {
  struct Cell {
    const char* source;
    int normal, exudates, drusen;
  };
  const Cell cells[] = {{"ORNL", 36, 20, 61},        {"STARE", 0, 0, 23},
                        {"HRF", 15, 0, 0},           {"DRiDB", 10, 28, 0},
                        {"e_ophtha_EX", 35, 47, 0},  {"HEI-MED", 61, 28, 0},
                        {"MESSIDOR", 540, 229, 0}};
  DatasetManifest m;
  for (const Cell& c : cells) {
    const int counts[3] = {c.normal, c.exudates, c.drusen};
    for (ClassLabel l : kAllClasses) {
      for (int i = 0; i < counts[index_of(l)]; ++i) {
        m.entries.push_back({std::string(c.source) + "/" + std::string(label_name(l)) + "_" +
                                 std::to_string(i) + ".png",
                             l, c.source});
      }
    }
  }
  return m;
}

TEST(SplitMix64, GoldenSequenceSeed42) {
  SplitMix64 rng(42);
  const std::uint64_t expected[] = {0xbdd732262feb6e95ULL, 0x28efe333b266f103ULL,
                                    0x47526757130f9f52ULL, 0x581ce1ff0e4ae394ULL,
                                    0x09bc585a244823f2ULL, 0xde4431fa3c80db06ULL};
  for (std::uint64_t e : expected) EXPECT_EQ(rng.next(), e);
}

TEST(SplitMix64, BoundedDrawsStayInRange) {
  SplitMix64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LT(rng.below(7), 7u);
    const int v = rng.between(-2, 2);
    EXPECT_GE(v, -2);
    EXPECT_LE(v, 2);
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Labels, ParseIsCaseInsensitive) {
  EXPECT_EQ(parse_label("Drusen"), ClassLabel::kDrusen);
  EXPECT_EQ(parse_label("NORMAL"), ClassLabel::kNormal);
  EXPECT_EQ(parse_label("exudates"), ClassLabel::kExudates);
  EXPECT_FALSE(parse_label("hemorrhage").has_value());
  EXPECT_EQ(label_from_ordinal(2), ClassLabel::kDrusen);
  EXPECT_RETINA_ERROR(label_from_ordinal(3), ErrorCode::kInvalidArgument);
}

TEST(LoadManifest, ParsesRowsAndResolvesAgainstParent) {
  TempDir tmp;
  write_file(tmp / "m.csv", "path,label,source\na.png,normal,HRF\r\nb.png,Exudates,DRiDB\n\n");
  const DatasetManifest m = load_manifest(tmp / "m.csv");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].path, "a.png");
  EXPECT_EQ(m.entries[0].label, ClassLabel::kNormal);
  EXPECT_EQ(m.entries[0].source, "HRF");
  EXPECT_EQ(m.entries[1].label, ClassLabel::kExudates);
  EXPECT_EQ(m.resolve(m.entries[1]), tmp.path() / "b.png");
}

TEST(LoadManifest, ReportsEachFailureClass) {
  TempDir tmp;
  EXPECT_RETINA_ERROR(load_manifest(tmp / "absent.csv"), ErrorCode::kMissingFile);

  write_file(tmp / "label.csv", "path,label,source\na.png,hemorrhage,X\n");
  EXPECT_RETINA_ERROR(load_manifest(tmp / "label.csv"), ErrorCode::kUnknownLabel);

  write_file(tmp / "dup.csv", "path,label,source\na.png,normal,X\na.png,drusen,Y\n");
  EXPECT_RETINA_ERROR(load_manifest(tmp / "dup.csv"), ErrorCode::kDuplicatePath);

  write_file(tmp / "fields.csv", "path,label,source\na.png,normal\n");
  try {
    load_manifest(tmp / "fields.csv");
    ADD_FAILURE() << "expected MalformedRow";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedRow);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }

  write_file(tmp / "header.csv", "file,class,origin\na.png,normal,X\n");
  EXPECT_RETINA_ERROR(load_manifest(tmp / "header.csv"), ErrorCode::kMalformedRow);

  write_file(tmp / "empty_src.csv", "path,label,source\na.png,normal,\n");
  EXPECT_RETINA_ERROR(load_manifest(tmp / "empty_src.csv"), ErrorCode::kMalformedRow);
}

TEST(WriteManifest, RoundTripsEntries) {
  TempDir tmp;
  const DatasetManifest ref = reference_corpus();
  write_manifest(tmp / "ref.csv", ref);
  const DatasetManifest back = load_manifest(tmp / "ref.csv");
  EXPECT_EQ(back.entries, ref.entries);
}

TEST(Audit, ReferenceCorpusReproducesEveryCell) {
  const ClassDistribution d = audit_distribution(reference_corpus());
  EXPECT_EQ(d.count(ClassLabel::kNormal), 697u);
  EXPECT_EQ(d.count(ClassLabel::kExudates), 352u);
  EXPECT_EQ(d.count(ClassLabel::kDrusen), 84u);
  EXPECT_EQ(d.total, 1133u);
  EXPECT_EQ(d.count("MESSIDOR", ClassLabel::kNormal), 540u);
  EXPECT_EQ(d.count("STARE", ClassLabel::kNormal), 0u);

  const std::string table = render_distribution(d);
  EXPECT_NE(table.find("| Dataset | ORNL | STARE | HRF | DRiDB | e_ophtha_EX | HEI-MED | MESSIDOR | All |"),
            std::string::npos) << table;
  EXPECT_NE(table.find("| Normal | 36 | - | 15 | 10 | 35 | 61 | 540 | 697 |"), std::string::npos) << table;
  EXPECT_NE(table.find("| Exudates | 20 | - | - | 28 | 47 | 28 | 229 | 352 |"), std::string::npos) << table;
  EXPECT_NE(table.find("| Drusen | 61 | 23 | - | - | - | - | - | 84 |"), std::string::npos) << table;
  EXPECT_NE(table.find("| Total | 117 | 23 | 15 | 38 | 82 | 89 | 769 | 1133 |"), std::string::npos) << table;
}

TEST(Audit, EmptyManifestIsAnError) {
  EXPECT_RETINA_ERROR(audit_distribution(DatasetManifest{}), ErrorCode::kEmptyManifest);
}

}  // namespace
}  // namespace retina
