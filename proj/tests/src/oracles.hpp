#pragma once

// Independent reference implementations used by unit and acceptance tests.
// None of these call into the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------- SVM dual

// max  sum(a) - 1/2 a'Qa   s.t. 0 <= a <= C, y'a = 0,   Q_ij = y_i y_j K_ij
inline double dual_objective(const std::vector<double>& q, const std::vector<double>& a) {
  const std::size_t n = a.size();
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += a[i];
    for (std::size_t j = 0; j < n; ++j) quad += a[i] * q[i * n + j] * a[j];
  }
  return lin - 0.5 * quad;
}

// Euclidean projection onto {0 <= a <= C, y'a = 0}: clip(v - lambda y) with
// lambda found by bisection on the monotone residual.
inline std::vector<double> project(const std::vector<double>& v, const std::vector<int>& y, double C) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  auto residual = [&](double lambda) {
    double r = 0.0;
    for (std::size_t i = 0; i < n; ++i) r += y[i] * std::clamp(v[i] - lambda * y[i], 0.0, C);
    return r;
  };
  double span = C;
  for (double x : v) span = std::max(span, std::abs(x) + C);
  double lo = -span, hi = span;  // residual(lo) >= 0 >= residual(hi)
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) > 0.0 ? lo : hi) = mid;
  }
  const double lambda = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < n; ++i) out[i] = std::clamp(v[i] - lambda * y[i], 0.0, C);
  return out;
}

// Dense Gaussian elimination with partial pivoting; false when singular.
inline bool solve(std::vector<double> a, std::vector<double> b, std::size_t n, std::vector<double>& x) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    }
    if (std::abs(a[p * n + c]) < 1e-10) return false;
    for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[p * n + k]);
    std::swap(b[c], b[p]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  return true;
}

// Accelerated projected gradient with restarts, then an exact polish: the
// variables strictly inside the box are re-solved from the equality-
// constrained stationarity system and kept when feasible and no worse.
inline double qp_optimum(const std::vector<double>& q, const std::vector<int>& y, double C,
                         std::vector<double>* alpha_out = nullptr) {
  const std::size_t n = y.size();
  double lip = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(q[i * n + j]);
    lip = std::max(lip, row);
  }
  const double step = 1.0 / std::max(lip, 1e-12);
  std::vector<double> a(n, 0.0), z = a, prev = a, grad(n);
  double t = 1.0, best = dual_objective(q, a);
  std::vector<double> best_a = a;
  int stale = 0;
  for (int it = 0; it < 40000 && stale < 2000; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = 1.0;
      for (std::size_t j = 0; j < n; ++j) g -= q[i * n + j] * z[j];
      grad[i] = z[i] + step * g;
    }
    prev = a;
    a = project(grad, y, C);
    const double obj = dual_objective(q, a);
    stale = obj > best + 1e-15 ? 0 : stale + 1;
    if (obj > best) {
      best = obj;
      best_a = a;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const bool restart = obj < dual_objective(q, prev);
    for (std::size_t i = 0; i < n; ++i) {
      z[i] = restart ? a[i] : a[i] + ((t - 1.0) / t_next) * (a[i] - prev[i]);
    }
    t = restart ? 1.0 : t_next;
  }

  // Polish.
  std::vector<std::size_t> free;
  std::vector<double> fixed = best_a;
  const double eps = 1e-6 * std::max(1.0, C);
  for (std::size_t i = 0; i < n; ++i) {
    if (best_a[i] > eps && best_a[i] < C - eps) {
      free.push_back(i);
    } else {
      fixed[i] = best_a[i] <= eps ? 0.0 : C;
    }
  }
  const std::size_t f = free.size();
  if (f > 0) {
    // [Q_FF y_F; y_F' 0] [a_F; nu] = [1 - Q_F,B a_B; -y_B' a_B]
    const std::size_t m = f + 1;
    std::vector<double> mat(m * m, 0.0), rhs(m, 0.0), sol;
    for (std::size_t r = 0; r < f; ++r) {
      const std::size_t i = free[r];
      rhs[r] = 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        const bool is_free = std::find(free.begin(), free.end(), j) != free.end();
        if (!is_free) rhs[r] -= q[i * n + j] * fixed[j];
      }
      for (std::size_t c = 0; c < f; ++c) mat[r * m + c] = q[i * n + free[c]];
      mat[r * m + f] = y[i];
      mat[f * m + r] = y[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (std::find(free.begin(), free.end(), j) == free.end()) rhs[f] -= y[j] * fixed[j];
    }
    if (solve(mat, rhs, m, sol)) {
      std::vector<double> cand = fixed;
      bool ok = true;
      for (std::size_t r = 0; r < f; ++r) {
        cand[free[r]] = sol[r];
        ok = ok && sol[r] >= -1e-12 && sol[r] <= C + 1e-12;
      }
      if (ok) {
        for (double& v : cand) v = std::clamp(v, 0.0, C);
        const double obj = dual_objective(q, cand);
        if (obj > best) {
          best = obj;
          best_a = cand;
        }
      }
    }
  } else {
    const double obj = dual_objective(q, fixed);
    double eq = 0.0;
    for (std::size_t i = 0; i < n; ++i) eq += y[i] * fixed[i];
    if (std::abs(eq) < 1e-12 && obj > best) {
      best = obj;
      best_a = fixed;
    }
  }
  if (alpha_out) *alpha_out = best_a;
  return best;
}

// ------------------------------------------------------------ metrics

struct Ratio {
  std::size_t num = 0;
  std::size_t den = 0;
};

struct BinaryCounts {
  Ratio acc, sens, spec;
};

// Expands the matrix into explicit samples and tallies one-vs-rest counts
// sample by sample.
inline std::array<BinaryCounts, 3> binarized_recount(
    const std::array<std::array<std::size_t, 3>, 3>& counts) {
  std::vector<std::pair<int, int>> samples;
  for (int t = 0; t < 3; ++t) {
    for (int p = 0; p < 3; ++p) {
      for (std::size_t n = 0; n < counts[t][p]; ++n) samples.emplace_back(t, p);
    }
  }
  std::array<BinaryCounts, 3> out{};
  for (int c = 0; c < 3; ++c) {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (auto [t, p] : samples) {
      const bool pos = t == c, said = p == c;
      if (pos && said) ++tp;
      else if (pos) ++fn;
      else if (said) ++fp;
      else ++tn;
    }
    out[c].acc = {tp + tn, samples.size()};
    out[c].sens = {tp, tp + fn};
    out[c].spec = {tn, tn + fp};
  }
  return out;
}

// ---------------------------------------------------------- Hessian

struct ScaleSpaceMax {
  double x = 0.0, y = 0.0, sigma = 0.0, response = -std::numeric_limits<double>::infinity();
};

// Scale-normalized determinant of Hessian from Gaussian smoothing plus
// central second differences, maximized over pixels and a sigma ladder.
inline ScaleSpaceMax doh_argmax(const std::vector<double>& img, int w, int h,
                                const std::vector<double>& sigmas) {
  ScaleSpaceMax best;
  std::vector<double> tmp(img.size()), sm(img.size());
  for (double s : sigmas) {
    const int r = static_cast<int>(std::ceil(4.0 * s));
    std::vector<double> k(2 * r + 1);
    double ks = 0.0;
    for (int i = -r; i <= r; ++i) ks += k[i + r] = std::exp(-0.5 * i * i / (s * s));
    for (double& v : k) v /= ks;
    auto px = [&](const std::vector<double>& src, int x, int y) {
      x = std::clamp(x, 0, w - 1);
      y = std::clamp(y, 0, h - 1);
      return src[static_cast<std::size_t>(y) * w + x];
    };
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * px(img, x + i, y);
        tmp[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * px(tmp, x, y + i);
        sm[static_cast<std::size_t>(y) * w + x] = acc;
      }
    }
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        const double dxx = px(sm, x + 1, y) - 2 * px(sm, x, y) + px(sm, x - 1, y);
        const double dyy = px(sm, x, y + 1) - 2 * px(sm, x, y) + px(sm, x, y - 1);
        const double dxy = 0.25 * (px(sm, x + 1, y + 1) - px(sm, x - 1, y + 1) -
                                   px(sm, x + 1, y - 1) + px(sm, x - 1, y - 1));
        const double det = std::pow(s, 4) * (dxx * dyy - dxy * dxy);
        if (det > best.response) best = {static_cast<double>(x), static_cast<double>(y), s, det};
      }
    }
  }
  return best;
}

// ---------------------------------------------------------- k-means

// Plain Lloyd step: assign by exhaustive search (lowest index on ties),
// then move each non-empty centre to its members' mean.
inline double lloyd_inertia(const std::vector<double>& x, std::size_t dim,
                            const std::vector<double>& centers) {
  const std::size_t m = x.size() / dim, k = centers.size() / dim;
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double t = x[i * dim + d] - centers[j * dim + d];
        d2 += t * t;
      }
      best = std::min(best, d2);
    }
    total += best;
  }
  return total;
}

}  // namespace oracle

namespace oracle {

// Gaussian blob sampled at integer pixel coordinates.
inline std::vector<double> gaussian_blob(int w, int h, double cx, double cy, double sigma,
                                         double amplitude, double background) {
  std::vector<double> img(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      img[static_cast<std::size_t>(y) * w + x] = background + amplitude * std::exp(-r2 / (2 * sigma * sigma));
    }
  }
  return img;
}

}  // namespace oracle
