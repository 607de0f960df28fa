#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace retina {

enum class ClassLabel : int { kNormal = 0, kExudates = 1, kDrusen = 2 };

inline constexpr std::size_t kNumClasses = 3;
inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::kNormal, ClassLabel::kExudates, ClassLabel::kDrusen};

constexpr std::size_t index_of(ClassLabel c) { return static_cast<std::size_t>(c); }

// Lower-case canonical name: "normal", "exudates", "drusen".
std::string_view label_name(ClassLabel c);
// Case-insensitive; std::nullopt for anything outside the three classes.
std::optional<ClassLabel> parse_label(std::string_view token);
// Throws kInvalidArgument for values outside 0..2.
ClassLabel label_from_ordinal(int ordinal);

struct ManifestEntry {
  std::filesystem::path path;
  ClassLabel label;
  std::string source;

  bool operator==(const ManifestEntry&) const = default;
};

// A labeled image inventory. Relative entry paths are resolved against
// root, which load_manifest sets to the manifest's parent directory.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;

  std::filesystem::path resolve(const ManifestEntry& e) const;
  std::vector<ClassLabel> labels() const;
};

// CSV with header `path,label,source`. Fields are split on ',' with no
// quoting, so paths containing commas are not supported.
DatasetManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

struct ClassDistribution {
  std::array<std::size_t, kNumClasses> per_class{};
  // Sources in order of first appearance in the manifest.
  std::vector<std::pair<std::string, std::array<std::size_t, kNumClasses>>> per_source;
  std::size_t total = 0;

  std::size_t count(ClassLabel c) const { return per_class[index_of(c)]; }
  std::size_t count(std::string_view source, ClassLabel c) const;
};

ClassDistribution audit_distribution(const DatasetManifest& m);

// Table with one column per source plus "All", one row per class. Missing
// cells print "-".
std::string render_distribution(const ClassDistribution& d);

}  // namespace retina
