#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace retina {

enum class FeatureKind { kBovwHistogram, kDeep };

// Fixed-length image representation fed to the classifier. Unit L2 norm
// unless `degenerate` is set, in which case every value is zero.
struct FeatureVector {
  std::vector<double> values;
  FeatureKind kind = FeatureKind::kDeep;
  std::string model_id;  // backend id for deep features, empty for BoVW
  bool degenerate = false;

  std::size_t dim() const { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

double l2_norm(std::span<const double> v);
// In-place; returns false (leaving zeros) when the vector is all zero.
bool normalize_unit(std::span<double> v);

}  // namespace retina
