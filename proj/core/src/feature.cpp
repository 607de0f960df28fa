#include "retina/feature.hpp"

#include <cmath>

namespace retina {

double l2_norm(std::span<const double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  return std::sqrt(ss);
}

bool normalize_unit(std::span<double> v) {
  const double n = l2_norm(v);
  if (n == 0.0) return false;
  for (double& x : v) x /= n;
  return true;
}

}  // namespace retina
