#include "retina/svm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <tbb/parallel_for.h>

#include "binary_io.hpp"
#include "retina/error.hpp"

namespace retina {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sq_dist(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double eval_raw(const Kernel& k, const double* a, const double* b, std::size_t n) {
  return k.type == KernelType::kLinear ? dot(a, b, n) : std::exp(-k.gamma * sq_dist(a, b, n));
}

void validate(const SvmConfig& cfg) {
  if (!(cfg.C > 0.0)) throw Error(ErrorCode::kInvalidArgument, "C must be > 0");
  if (!(cfg.kkt_tolerance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "kkt_tolerance must be > 0");
  if (cfg.kernel.type == KernelType::kRbf && cfg.kernel.gamma < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be > 0");
  }
  if (cfg.max_passes < 1) throw Error(ErrorCode::kInvalidArgument, "max_passes must be >= 1");
}

}  // namespace

double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  return eval_raw(k, x.data(), y.data(), x.size());
}

double BinarySvmModel::decision(std::span<const double> x) const {
  if (x.size() != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model dim " + std::to_string(dim) + ", input " + std::to_string(x.size()));
  }
  double f = bias;
  for (std::size_t i = 0; i < coef.size(); ++i) {
    f += coef[i] * eval_raw(kernel, support.data() + i * dim, x.data(), dim);
  }
  return f;
}

BinarySvmModel train_binary(std::span<const Sample> x, std::span<const int> y,
                            const SvmConfig& cfg, SmoTrace* trace) {
  validate(cfg);
  const std::size_t n = x.size();
  if (y.size() != n) throw Error(ErrorCode::kLengthMismatch, "samples and labels differ in length");
  if (n == 0) throw Error(ErrorCode::kSingleClassInput, "no training samples");
  const std::size_t dim = x.front().size();
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != dim) throw Error(ErrorCode::kDimensionMismatch, "non-uniform sample dims");
    if (y[i] != 1 && y[i] != -1) throw Error(ErrorCode::kInvalidArgument, "labels must be +1/-1");
    has_pos = has_pos || y[i] == 1;
    has_neg = has_neg || y[i] == -1;
    for (double v : x[i]) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "sample " + std::to_string(i));
    }
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::kSingleClassInput, "need both +1 and -1 labels");

  Kernel kernel = cfg.kernel;
  if (kernel.type == KernelType::kRbf && kernel.gamma == 0.0) kernel.gamma = 1.0 / static_cast<double>(dim);

  // Q_ij = y_i y_j K(x_i, x_j), precomputed; training sets here are small.
  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = y[i] * y[j] * eval_raw(kernel, x[i].data(), x[j].data(), dim);
      q[i * n + j] = v;
      q[j * n + i] = v;
    }
  }

  const double c = cfg.C;
  // Minimise f(a) = 1/2 a'Qa - e'a; G = Qa - e is its gradient.
  std::vector<double> alpha(n, 0.0), grad(n, -1.0);
  auto dual_objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
    return -0.5 * f;
  };
  if (trace) trace->dual_objective.push_back(0.0);

  BinarySvmModel model;
  model.kernel = kernel;
  model.dim = dim;
  model.converged = false;
  long iter = 0;
  while (true) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      const bool can_up = (y[t] == 1) ? alpha[t] < c : alpha[t] > 0.0;
      const bool can_low = (y[t] == 1) ? alpha[t] > 0.0 : alpha[t] < c;
      if (can_up && v > gmax) {
        gmax = v;
        i = t;
      }
      if (can_low && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < cfg.kkt_tolerance) {
      model.converged = true;
      break;
    }
    if (iter >= cfg.max_passes) break;
    ++iter;

    const double* qi = q.data() + i * n;
    const double* qj = q.data() + j * n;
    const double old_i = alpha[i], old_j = alpha[j];
    constexpr double kTau = 1e-12;
    if (y[i] != y[j]) {
      double quad = qi[i] + qj[j] + 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = c - diff;
        }
      } else if (alpha[j] > c) {
        alpha[j] = c;
        alpha[i] = c + diff;
      }
    } else {
      double quad = qi[i] + qj[j] - 2.0 * qi[j];
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) {
          alpha[i] = c;
          alpha[j] = sum - c;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > c) {
        if (alpha[j] > c) {
          alpha[j] = c;
          alpha[i] = sum - c;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * di + qj[t] * dj;
    if (trace) trace->dual_objective.push_back(dual_objective());
  }
  model.iterations = iter;

  // rho: mean of y*G over free vectors, else midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  model.bias = -rho;

  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 1e-9) {
      model.support.insert(model.support.end(), x[t].begin(), x[t].end());
      model.coef.push_back(alpha[t] * y[t]);
      model.support_indices.push_back(t);
    }
  }
  return model;
}

MultiClassSvmModel train_multiclass(std::span<const Sample> x, std::span<const ClassLabel> labels,
                                    const SvmConfig& cfg) {
  if (x.size() != labels.size()) throw Error(ErrorCode::kLengthMismatch, "samples vs labels");
  std::array<std::size_t, kNumClasses> counts{};
  for (ClassLabel l : labels) ++counts[index_of(l)];
  for (ClassLabel c : kAllClasses) {
    if (counts[index_of(c)] == 0) throw Error(ErrorCode::kMissingClass, std::string(label_name(c)));
  }
  validate(cfg);
  MultiClassSvmModel m;
  m.dim = x.front().size();
  // Resolve the default gamma once so all pairs agree.
  SvmConfig pair_cfg = cfg;
  if (pair_cfg.kernel.type == KernelType::kRbf && pair_cfg.kernel.gamma == 0.0) {
    pair_cfg.kernel.gamma = 1.0 / static_cast<double>(m.dim);
  }
  tbb::parallel_for(std::size_t{0}, std::size_t{3}, [&](std::size_t p) {
    const auto [pos, neg] = MultiClassSvmModel::kPairs[p];
    std::vector<Sample> xs;
    std::vector<int> ys;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (labels[i] == pos || labels[i] == neg) {
        xs.push_back(x[i]);
        ys.push_back(labels[i] == pos ? 1 : -1);
      }
    }
    m.pairs[p] = train_binary(xs, ys, pair_cfg);
  });
  return m;
}

MultiClassSvmModel train_multiclass(std::span<const FeatureVector> x,
                                    std::span<const ClassLabel> labels, const SvmConfig& cfg) {
  std::vector<Sample> xs;
  xs.reserve(x.size());
  for (const auto& f : x) xs.emplace_back(f.values);
  return train_multiclass(std::span<const Sample>(xs), labels, cfg);
}

std::array<double, 3> pairwise_decisions(const MultiClassSvmModel& m, std::span<const double> x) {
  if (x.size() != m.dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model dim " + std::to_string(m.dim) + ", input " + std::to_string(x.size()));
  }
  return {m.pairs[0].decision(x), m.pairs[1].decision(x), m.pairs[2].decision(x)};
}

ClassLabel vote(const std::array<double, 3>& decisions) {
  std::array<int, kNumClasses> votes{};
  std::array<double, kNumClasses> strength{};
  for (std::size_t p = 0; p < 3; ++p) {
    const auto [pos, neg] = MultiClassSvmModel::kPairs[p];
    const ClassLabel winner = decisions[p] > 0.0 ? pos : neg;
    ++votes[index_of(winner)];
    strength[index_of(winner)] += std::abs(decisions[p]);
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumClasses; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && strength[c] > strength[best])) {
      best = c;
    }
  }
  return static_cast<ClassLabel>(best);
}

ClassLabel predict(const MultiClassSvmModel& m, std::span<const double> x) {
  return vote(pairwise_decisions(m, x));
}

void save_model(const std::filesystem::path& path, const MultiClassSvmModel& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write("RSM1", 4);
  binio::put_u32(out, static_cast<std::uint32_t>(m.dim));
  binio::put_u8(out, static_cast<std::uint8_t>(m.pairs[0].kernel.type));
  binio::put_f32(out, static_cast<float>(m.pairs[0].kernel.gamma));
  for (std::size_t p = 0; p < 3; ++p) {
    const BinarySvmModel& b = m.pairs[p];
    binio::put_u8(out, static_cast<std::uint8_t>(index_of(MultiClassSvmModel::kPairs[p][0])));
    binio::put_u8(out, static_cast<std::uint8_t>(index_of(MultiClassSvmModel::kPairs[p][1])));
    binio::put_f32(out, static_cast<float>(b.bias));
    binio::put_u32(out, static_cast<std::uint32_t>(b.support_count()));
    for (std::size_t s = 0; s < b.support_count(); ++s) {
      binio::put_f32(out, static_cast<float>(b.coef[s]));
      for (std::size_t d = 0; d < m.dim; ++d) binio::put_f32(out, static_cast<float>(b.support[s * m.dim + d]));
    }
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

MultiClassSvmModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4)) throw Error(ErrorCode::kTruncatedFile, path.string());
  if (std::string_view(magic, 4) != "RSM1") throw Error(ErrorCode::kBadMagic, path.string());
  auto truncated = [&] { return Error(ErrorCode::kTruncatedFile, path.string()); };
  std::uint32_t dim = 0;
  std::uint8_t kernel_type = 0;
  float gamma = 0.0f;
  if (!binio::get_u32(in, dim) || !binio::get_u8(in, kernel_type) || !binio::get_f32(in, gamma)) {
    throw truncated();
  }
  if (kernel_type > 1) throw Error(ErrorCode::kInvalidArgument, "unknown kernel type");
  MultiClassSvmModel m;
  m.dim = dim;
  for (std::size_t p = 0; p < 3; ++p) {
    BinarySvmModel& b = m.pairs[p];
    b.kernel = {static_cast<KernelType>(kernel_type), gamma};
    b.dim = dim;
    std::uint8_t pos = 0, neg = 0;
    float bias = 0.0f;
    std::uint32_t nsv = 0;
    if (!binio::get_u8(in, pos) || !binio::get_u8(in, neg) || !binio::get_f32(in, bias) ||
        !binio::get_u32(in, nsv)) {
      throw truncated();
    }
    if (label_from_ordinal(pos) != MultiClassSvmModel::kPairs[p][0] ||
        label_from_ordinal(neg) != MultiClassSvmModel::kPairs[p][1]) {
      throw Error(ErrorCode::kInvalidArgument, "unexpected class pair order");
    }
    b.bias = bias;
    b.coef.resize(nsv);
    b.support.resize(static_cast<std::size_t>(nsv) * dim);
    for (std::uint32_t s = 0; s < nsv; ++s) {
      float v;
      if (!binio::get_f32(in, v)) throw truncated();
      b.coef[s] = v;
      for (std::uint32_t d = 0; d < dim; ++d) {
        if (!binio::get_f32(in, v)) throw truncated();
        b.support[static_cast<std::size_t>(s) * dim + d] = v;
      }
    }
  }
  return m;
}

}  // namespace retina
