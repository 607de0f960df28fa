#include "retina/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "retina/error.hpp"

namespace retina {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

std::string_view label_name(ClassLabel c) {
  switch (c) {
    case ClassLabel::kNormal: return "normal";
    case ClassLabel::kExudates: return "exudates";
    case ClassLabel::kDrusen: return "drusen";
  }
  return "?";
}

std::optional<ClassLabel> parse_label(std::string_view token) {
  std::string t = lower(trim(token));
  for (ClassLabel c : kAllClasses) {
    if (t == label_name(c)) return c;
  }
  return std::nullopt;
}

ClassLabel label_from_ordinal(int ordinal) {
  if (ordinal < 0 || ordinal >= static_cast<int>(kNumClasses)) {
    throw Error(ErrorCode::kInvalidArgument,
                "class ordinal out of range: " + std::to_string(ordinal));
  }
  return static_cast<ClassLabel>(ordinal);
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  if (e.path.is_absolute() || root.empty()) return e.path;
  return root / e.path;
}

std::vector<ClassLabel> DatasetManifest::labels() const {
  std::vector<ClassLabel> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.label);
  return out;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());

  DatasetManifest m;
  m.root = path.parent_path();
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      // Tolerate a UTF-8 byte order mark.
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (trim(line) != "path,label,source") {
        throw Error(ErrorCode::kMalformedRow,
                    "line 1: expected header 'path,label,source'");
      }
      header_seen = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    if (fields.size() != 3) {
      throw Error(ErrorCode::kMalformedRow, "line " + std::to_string(line_no) +
                                                ": expected 3 fields, got " +
                                                std::to_string(fields.size()));
    }
    std::string_view p = trim(fields[0]);
    std::string_view src = trim(fields[2]);
    if (p.empty() || src.empty()) {
      throw Error(ErrorCode::kMalformedRow,
                  "line " + std::to_string(line_no) + ": empty path or source");
    }
    auto label = parse_label(fields[1]);
    if (!label) throw Error(ErrorCode::kUnknownLabel, std::string(trim(fields[1])));
    if (!seen.emplace(p).second) throw Error(ErrorCode::kDuplicatePath, std::string(p));
    m.entries.push_back({std::filesystem::path(std::string(p)), *label, std::string(src)});
  }
  if (!header_seen) throw Error(ErrorCode::kMalformedRow, "line 1: missing header");
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << "path,label,source\n";
  for (const auto& e : m.entries) {
    std::string p = e.path.generic_string();
    if (p.find(',') != std::string::npos || e.source.find(',') != std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument, "field contains a comma: " + p);
    }
    out << p << ',' << label_name(e.label) << ',' << e.source << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::size_t ClassDistribution::count(std::string_view source, ClassLabel c) const {
  for (const auto& [name, counts] : per_source) {
    if (name == source) return counts[index_of(c)];
  }
  return 0;
}

ClassDistribution audit_distribution(const DatasetManifest& m) {
  if (m.entries.empty()) throw Error(ErrorCode::kEmptyManifest, "manifest has no entries");
  ClassDistribution d;
  for (const auto& e : m.entries) {
    ++d.per_class[index_of(e.label)];
    auto it = std::find_if(d.per_source.begin(), d.per_source.end(),
                           [&](const auto& s) { return s.first == e.source; });
    if (it == d.per_source.end()) {
      d.per_source.push_back({e.source, {}});
      it = std::prev(d.per_source.end());
    }
    ++it->second[index_of(e.label)];
  }
  d.total = m.entries.size();
  return d;
}

std::string render_distribution(const ClassDistribution& d) {
  std::ostringstream os;
  os << "| Dataset |";
  for (const auto& [name, _] : d.per_source) os << ' ' << name << " |";
  os << " All |\n|---|";
  for (std::size_t i = 0; i < d.per_source.size(); ++i) os << "---|";
  os << "---|\n";
  for (ClassLabel c : kAllClasses) {
    std::string name(label_name(c));
    name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
    os << "| " << name << " |";
    for (const auto& [_, counts] : d.per_source) {
      std::size_t n = counts[index_of(c)];
      if (n == 0) {
        os << " - |";
      } else {
        os << ' ' << n << " |";
      }
    }
    os << ' ' << d.count(c) << " |\n";
  }
  os << "| Total |";
  for (const auto& [_, counts] : d.per_source) {
    os << ' ' << counts[0] + counts[1] + counts[2] << " |";
  }
  os << ' ' << d.total << " |\n";
  return os.str();
}

}  // namespace retina
