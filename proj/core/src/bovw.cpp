#include "retina/bovw.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include "binary_io.hpp"
#include "retina/error.hpp"
#include "retina/rng.hpp"

namespace retina {
namespace {

// Four independent accumulators; fixed summation order keeps results
// reproducible regardless of threading.
double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= dim; i += 4) {
    const double d0 = a[i] - b[i], d1 = a[i + 1] - b[i + 1];
    const double d2 = a[i + 2] - b[i + 2], d3 = a[i + 3] - b[i + 3];
    s0 += d0 * d0;
    s1 += d1 * d1;
    s2 += d2 * d2;
    s3 += d3 * d3;
  }
  for (; i < dim; ++i) {
    const double d = a[i] - b[i];
    s0 += d * d;
  }
  return (s0 + s1) + (s2 + s3);
}

template <typename Fn>
void parallel_rows(std::size_t n, Fn&& fn) {
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n, 512),
                    [&](const tbb::blocked_range<std::size_t>& r) {
                      for (std::size_t i = r.begin(); i != r.end(); ++i) fn(i);
                    });
}

std::vector<double> seed_plus_plus(const DescriptorMatrix& x, std::size_t k, SplitMix64& rng) {
  const std::size_t m = x.rows(), dim = x.dim;
  std::vector<double> centers(k * dim);
  std::vector<char> chosen(m, 0);
  std::vector<double> min_d2(m);

  auto take = [&](std::size_t idx, std::size_t slot) {
    chosen[idx] = 1;
    std::copy_n(x.data.data() + idx * dim, dim, centers.data() + slot * dim);
  };
  take(rng.below(m), 0);
  parallel_rows(m, [&](std::size_t i) {
    min_d2[i] = sq_dist(x.data.data() + i * dim, centers.data(), dim);
  });

  for (std::size_t slot = 1; slot < k; ++slot) {
    double total = 0.0;
    for (double v : min_d2) total += v;
    std::size_t pick = m;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      std::size_t last_positive = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (min_d2[i] <= 0.0) continue;
        last_positive = i;
        cum += min_d2[i];
        if (cum > target) {
          pick = i;
          break;
        }
      }
      if (pick == m) pick = last_positive;
    } else {
      // Every remaining point coincides with a chosen centre.
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
    }
    take(pick, slot);
    const double* c = centers.data() + slot * dim;
    parallel_rows(m, [&](std::size_t i) {
      min_d2[i] = std::min(min_d2[i], sq_dist(x.data.data() + i * dim, c, dim));
    });
  }
  return centers;
}

// Partition centres into about k/10 groups by a few Lloyd steps on the
// centres themselves. Any partition is correct; tighter groups prune more.
std::vector<std::size_t> group_centres(const std::vector<double>& centers, std::size_t k,
                                       std::size_t dim) {
  const std::size_t g = std::max<std::size_t>(1, (k + 5) / 10);
  std::vector<std::size_t> group_of(k, 0);
  if (g == 1) return group_of;
  std::vector<double> seeds(g * dim);
  for (std::size_t s = 0; s < g; ++s) {
    std::copy_n(centers.data() + (s * k / g) * dim, dim, seeds.data() + s * dim);
  }
  std::vector<double> sums(g * dim);
  std::vector<std::size_t> counts(g);
  for (int round = 0; round < 5; ++round) {
    for (std::size_t j = 0; j < k; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t s = 0; s < g; ++s) {
        const double d2 = sq_dist(centers.data() + j * dim, seeds.data() + s * dim, dim);
        if (d2 < best) {
          best = d2;
          group_of[j] = s;
        }
      }
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t d = 0; d < dim; ++d) sums[group_of[j] * dim + d] += centers[j * dim + d];
      ++counts[group_of[j]];
    }
    for (std::size_t s = 0; s < g; ++s) {
      if (counts[s] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) seeds[s * dim + d] = sums[s * dim + d] / counts[s];
    }
  }
  // Drop empty groups so every group index is populated.
  std::vector<std::size_t> remap(g, g);
  std::size_t used = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (remap[group_of[j]] == g) remap[group_of[j]] = used++;
    group_of[j] = remap[group_of[j]];
  }
  return group_of;
}

// Nearest centre over all k; lb[g] receives the nearest non-assigned
// distance within each group.
void full_scan(const double* p, const std::vector<double>& centers,
               const std::vector<std::size_t>& group_of, std::size_t dim, std::size_t& assign,
               double& upper, double* lb) {
  const std::size_t k = group_of.size();
  thread_local std::vector<double> dist;
  dist.resize(k);
  std::size_t best = 0;
  for (std::size_t j = 0; j < k; ++j) {
    dist[j] = std::sqrt(sq_dist(p, centers.data() + j * dim, dim));
    if (dist[j] < dist[best]) best = j;
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (j != best) lb[group_of[j]] = std::min(lb[group_of[j]], dist[j]);
  }
  assign = best;
  upper = dist[best];
}

}  // namespace

void DescriptorMatrix::append(std::span<const double> v) {
  if (v.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "row length differs from dim");
  data.insert(data.end(), v.begin(), v.end());
}

DescriptorMatrix stack_descriptors(std::span<const DescriptorSet* const> sets) {
  DescriptorMatrix m;
  std::size_t total = 0;
  for (const DescriptorSet* s : sets) total += s->size();
  m.data.reserve(total * kDescriptorDim);
  for (const DescriptorSet* s : sets) {
    for (const Descriptor& d : s->descriptors) m.append(d.values);
  }
  return m;
}

Codebook kmeans_fit(const DescriptorMatrix& x, const CodebookConfig& cfg) {
  if (cfg.words < 1 || cfg.max_iterations < 1 || !(cfg.rel_tolerance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "codebook config needs W >= 1, iterations >= 1, tol > 0");
  }
  if (x.dim == 0) throw Error(ErrorCode::kDimensionMismatch, "zero-dimensional features");
  const std::size_t m = x.rows(), k = cfg.words, dim = x.dim;
  if (m < k) {
    throw Error(ErrorCode::kTooFewFeatures,
                "M=" + std::to_string(m) + " < W=" + std::to_string(k));
  }
  if (!std::all_of(x.data.begin(), x.data.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::kNonFiniteInput, "k-means input contains NaN or Inf");
  }

  SplitMix64 rng(cfg.seed);
  std::vector<double> centers = seed_plus_plus(x, k, rng);

  // Yinyang bounds: upper >= distance to the assigned centre; lower[g] <=
  // distance to every other centre in group g.
  const std::vector<std::size_t> group_of = group_centres(centers, k, dim);
  const std::size_t groups = *std::max_element(group_of.begin(), group_of.end()) + 1;
  std::vector<std::size_t> assign(m);
  std::vector<double> upper(m), lower(m * groups), dist2(m);
  parallel_rows(m, [&](std::size_t i) {
    double* lb = lower.data() + i * groups;
    std::fill(lb, lb + groups, std::numeric_limits<double>::infinity());
    full_scan(x.data.data() + i * dim, centers, group_of, dim, assign[i], upper[i], lb);
  });

  Codebook cb;
  cb.dim = dim;
  auto measure_inertia = [&] {
    parallel_rows(m, [&](std::size_t i) {
      dist2[i] = sq_dist(x.data.data() + i * dim, centers.data() + assign[i] * dim, dim);
    });
    double total = 0.0;
    for (double v : dist2) total += v;
    return total;
  };

  std::vector<double> sums(k * dim), next(k * dim), moved(k), group_drift(groups);
  std::vector<std::size_t> counts(k);
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    cb.inertia_history.push_back(measure_inertia());

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < m; ++i) {
      const double* p = x.data.data() + i * dim;
      double* s = sums.data() + assign[i] * dim;
      for (std::size_t d = 0; d < dim; ++d) s[d] += p[d];
      ++counts[assign[i]];
    }
    std::vector<char> reseeded(m, 0);
    for (std::size_t j = 0; j < k; ++j) {
      double* c = next.data() + j * dim;
      if (counts[j] > 0) {
        for (std::size_t d = 0; d < dim; ++d) c[d] = sums[j * dim + d] / static_cast<double>(counts[j]);
        continue;
      }
      std::size_t far = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (!reseeded[i] && (far == m || dist2[i] > dist2[far])) far = i;
      }
      reseeded[far] = 1;
      std::copy_n(x.data.data() + far * dim, dim, c);
    }

    double move_ss = 0.0, norm_ss = 0.0;
    std::fill(group_drift.begin(), group_drift.end(), 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      const double d2 = sq_dist(next.data() + j * dim, centers.data() + j * dim, dim);
      moved[j] = std::sqrt(d2);
      move_ss += d2;
      for (std::size_t d = 0; d < dim; ++d) norm_ss += centers[j * dim + d] * centers[j * dim + d];
      group_drift[group_of[j]] = std::max(group_drift[group_of[j]], moved[j]);
    }
    centers.swap(next);
    cb.iterations = iter;

    parallel_rows(m, [&](std::size_t i) {
      const double* p = x.data.data() + i * dim;
      double* lb = lower.data() + i * groups;
      const std::size_t a = assign[i];
      double u = upper[i] + moved[a];
      double floor = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < groups; ++g) {
        lb[g] -= group_drift[g];
        floor = std::min(floor, lb[g]);
      }
      // Skip only when the bound clears by more than accumulated rounding.
      auto slack = [](double a, double b) { return 1e-9 * (a + std::abs(b)) + 1e-12; };
      if (u + slack(u, floor) < floor) {
        upper[i] = u;
        return;
      }
      u = std::sqrt(sq_dist(p, centers.data() + a * dim, dim));
      if (u + slack(u, floor) < floor) {
        upper[i] = u;
        return;
      }
      // Rescan every group whose bound does not clear the exact distance.
      thread_local std::vector<char> scanned;
      thread_local std::vector<double> dist;
      scanned.assign(groups, 0);
      dist.resize(k);
      for (std::size_t g = 0; g < groups; ++g) {
        if (lb[g] <= u + slack(u, lb[g])) {
          scanned[g] = 1;
          lb[g] = std::numeric_limits<double>::infinity();
        }
      }
      std::size_t best = a;
      double best_d = u;
      for (std::size_t j = 0; j < k; ++j) {
        if (!scanned[group_of[j]] || j == a) continue;
        dist[j] = std::sqrt(sq_dist(p, centers.data() + j * dim, dim));
        if (dist[j] < best_d) {
          best_d = dist[j];
          best = j;
        }
      }
      for (std::size_t j = 0; j < k; ++j) {
        if (j == best) continue;
        if (j == a) {
          lb[group_of[j]] = std::min(lb[group_of[j]], u);
        } else if (scanned[group_of[j]]) {
          lb[group_of[j]] = std::min(lb[group_of[j]], dist[j]);
        }
      }
      assign[i] = best;
      upper[i] = best_d;
    });

    const double rel = norm_ss > 0.0 ? std::sqrt(move_ss / norm_ss) : std::sqrt(move_ss);
    if (rel < cfg.rel_tolerance) {
      cb.converged = true;
      break;
    }
  }
  cb.inertia = measure_inertia();
  cb.inertia_history.push_back(cb.inertia);
  cb.words = std::move(centers);
  return cb;
}

std::size_t quantize(std::span<const double> d, const Codebook& cb) {
  if (d.size() != cb.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "descriptor dim " + std::to_string(d.size()) + " vs codebook " + std::to_string(cb.dim));
  }
  if (cb.size() == 0) throw Error(ErrorCode::kInvalidArgument, "empty codebook");
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < cb.size(); ++j) {
    const double d2 = sq_dist(d.data(), cb.words.data() + j * cb.dim, cb.dim);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = j;
    }
  }
  return best;
}

FeatureVector encode_histogram(const DescriptorSet& ds, const Codebook& cb) {
  FeatureVector fv;
  fv.kind = FeatureKind::kBovwHistogram;
  fv.values.assign(cb.size(), 0.0);
  bool any_nonzero = false;
  for (const Descriptor& d : ds.descriptors) {
    fv.values[quantize(d.values, cb)] += 1.0;
    any_nonzero = any_nonzero || !d.is_zero();
  }
  if (!any_nonzero) {
    std::fill(fv.values.begin(), fv.values.end(), 0.0);
    fv.degenerate = true;
    return fv;
  }
  normalize_unit(fv.values);
  return fv;
}

void save_codebook(const std::filesystem::path& path, const Codebook& cb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write("RCB1", 4);
  binio::put_u32(out, static_cast<std::uint32_t>(cb.size()));
  binio::put_u32(out, static_cast<std::uint32_t>(cb.dim));
  for (double v : cb.words) binio::put_f32(out, static_cast<float>(v));
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "RCB1") {
    throw Error(ErrorCode::kBadMagic, path.string());
  }
  std::uint32_t k = 0, dim = 0;
  if (!binio::get_u32(in, k) || !binio::get_u32(in, dim)) {
    throw Error(ErrorCode::kTruncatedFile, path.string());
  }
  const auto header_end = in.tellg();
  in.seekg(0, std::ios::end);
  const auto payload = static_cast<std::uint64_t>(in.tellg() - header_end);
  in.seekg(header_end);
  if (payload < 4ull * k * dim) throw Error(ErrorCode::kTruncatedFile, path.string());
  Codebook cb;
  cb.dim = dim;
  cb.words.resize(static_cast<std::size_t>(k) * dim);
  for (double& v : cb.words) {
    float f = 0.0f;
    if (!binio::get_f32(in, f)) throw Error(ErrorCode::kTruncatedFile, path.string());
    v = f;
  }
  return cb;
}

}  // namespace retina
