// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <list>
#include <string>
#include <unordered_map>

#include "parallel.hpp"
#include "rotoscat/binary_io.hpp"

namespace rotoscat {
namespace {

constexpr std::array<char, 4> kModelMagic{'R', 'S', 'K', 'M'};
constexpr double kTau = 1e-12;

// Rows of a precomputed kernel matrix.
class FullKernel {
 public:
  explicit FullKernel(const Eigen::MatrixXd& k) : k_(k) {}
  const double* row(Eigen::Index i) { return k_.col(i).data(); }  // symmetric
  double diag(Eigen::Index i) const { return k_(i, i); }
  Eigen::Index size() const { return k_.rows(); }

 private:
  const Eigen::MatrixXd& k_;
};

// Rows computed on demand and kept in a least-recently-used cache.
class RowCache {
 public:
  RowCache(const Eigen::MatrixXd& x, double sigma2, std::size_t bytes)
      : x_(x), norms_(x.rowwise().squaredNorm()), sigma2_(sigma2) {
    const std::size_t row_bytes = static_cast<std::size_t>(x.rows()) * sizeof(double);
    capacity_ = std::max<std::size_t>(2, bytes / std::max<std::size_t>(row_bytes, 1));
  }

  const double* row(Eigen::Index i) {
    if (auto it = index_.find(i); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->second.data();
    }
    if (order_.size() >= capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
    Eigen::VectorXd r = x_ * x_.row(i).transpose();
    for (Eigen::Index t = 0; t < r.size(); ++t) {
      r[t] = std::exp(-std::max(0.0, norms_[t] + norms_[i] - 2.0 * r[t]) / (2.0 * sigma2_));
    }
    r[i] = 1.0;
    order_.emplace_front(i, std::move(r));
    index_[i] = order_.begin();
    return order_.front().second.data();
  }
  double diag(Eigen::Index) const { return 1.0; }
  Eigen::Index size() const { return x_.rows(); }

 private:
  using Entry = std::pair<Eigen::Index, Eigen::VectorXd>;
  const Eigen::MatrixXd& x_;
  Eigen::VectorXd norms_;
  double sigma2_;
  std::size_t capacity_ = 2;
  std::list<Entry> order_;
  std::unordered_map<Eigen::Index, std::list<Entry>::iterator> index_;
};

// SMO with second-order working-set selection. Gradient of
// f(a) = 1/2 a'Qa - e'a with Q_ij = y_i y_j K_ij.
template <class Kernel>
BinaryDiagnostics smo(Kernel& kernel, const std::vector<int>& y, double C, const SvmOptions& options,
                      Eigen::VectorXd& alpha, double& bias) {
  const Eigen::Index n = kernel.size();
  alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
  auto up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

  BinaryDiagnostics diag;
  for (;;) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t)) gmin = std::min(gmin, v);
    }
    diag.gap = gmax - gmin;
    if (i < 0 || diag.gap < options.tolerance) {
      diag.converged = true;
      break;
    }
    if (diag.iterations >= options.max_iterations) break;

    const double* ki = kernel.row(i);
    Eigen::Index j = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!low(t)) continue;
      const double b = gmax + y[t] * grad[t];
      if (b <= 0) continue;
      double a = kernel.diag(i) + kernel.diag(t) - 2.0 * ki[t];
      if (a <= 0) a = kTau;
      const double score = -b * b / a;
      if (score < best) {
        best = score;
        j = t;
      }
    }
    if (j < 0) {
      diag.converged = true;
      break;
    }
    const double* kj = kernel.row(j);
    ki = kernel.row(i);  // the cache may have evicted row i

    // Two-variable subproblem, clipped to the box (LIBSVM's update).
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    double a = kernel.diag(i) + kernel.diag(j) - 2.0 * ki[j];
    if (a <= 0) a = kTau;
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / a;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0 && alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = diff;
      } else if (diff <= 0 && alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0 && alpha[i] > C) {
        alpha[i] = C;
        alpha[j] = C - diff;
      } else if (diff <= 0 && alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / a;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C && alpha[i] > C) {
        alpha[i] = C;
        alpha[j] = sum - C;
      } else if (sum <= C && alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C && alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = sum - C;
      } else if (sum <= C && alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = (alpha[i] - old_ai) * y[i];
    const double dj = (alpha[j] - old_aj) * y[j];
    for (Eigen::Index t = 0; t < n; ++t) grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
    ++diag.iterations;
  }

  // Offset from free vectors; midpoint of the feasible interval otherwise.
  double sum = 0.0;
  int free = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0 && alpha[t] < C) {
      sum += yg;
      ++free;
    } else if ((alpha[t] >= C && y[t] < 0) || (alpha[t] <= 0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = free > 0 ? sum / free : 0.5 * (ub + lb);
  bias = -rho;
  // grad = Qa - e, so a'Qa = a'(grad + e).
  diag.dual_objective = alpha.sum() - 0.5 * alpha.dot(grad + Eigen::VectorXd::Ones(n));
  return diag;
}

}  // namespace

double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                       double sigma2) {
  return std::exp(-(u - v).squaredNorm() / (2.0 * sigma2));
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma2) {
  if (a.cols() != b.cols()) throw ClassifierError("dimension-mismatch in kernel evaluation");
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  Eigen::MatrixXd k = a * b.transpose();
  for (Eigen::Index c = 0; c < k.cols(); ++c) {
    for (Eigen::Index r = 0; r < k.rows(); ++r) {
      k(r, c) = std::exp(-std::max(0.0, na[r] + nb[c] - 2.0 * k(r, c)) / (2.0 * sigma2));
    }
  }
  return k;
}

double estimate_bandwidth(const Eigen::MatrixXd& features, bool squared_norm) {
  if (features.rows() == 0) throw ClassifierError("empty-input: no vectors to estimate the bandwidth from");
  double total = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    total += squared_norm ? features.row(i).squaredNorm() : features.row(i).norm();
  }
  const double sigma2 = total / static_cast<double>(features.rows());
  if (!(sigma2 > 0.0)) throw ClassifierError("degenerate bandwidth: every vector is zero");
  return sigma2;
}

BinaryDiagnostics solve_binary(const Eigen::MatrixXd& kernel, const std::vector<int>& signs, double C,
                               const SvmOptions& options, Eigen::VectorXd& alpha, double& bias) {
  FullKernel k(kernel);
  return smo(k, signs, C, options, alpha, bias);
}

KernelModel train(const Eigen::MatrixXd& features, const std::vector<int>& labels, int n_classes, double sigma2,
                  const SvmOptions& options) {
  const Eigen::Index n = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw ClassifierError("label count does not match rows");
  if (!(sigma2 > 0.0)) throw ClassifierError("sigma2 must be positive");
  if (!(options.C > 0.0)) throw ClassifierError("C must be positive");
  std::vector<int> counts(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw ClassifierError("label out of range");
    ++counts[l];
  }
  if (std::count_if(counts.begin(), counts.end(), [](int c) { return c > 0; }) < 2) {
    throw ClassifierError("training needs at least two classes");
  }

  const bool full = n <= options.full_cache_limit;
  Eigen::MatrixXd gram;
  if (full) gram = kernel_matrix(features, features, sigma2);
  for (Eigen::Index i = 0; i < (full ? n : 0); ++i) gram(i, i) = 1.0;

  std::vector<Eigen::VectorXd> alphas(static_cast<std::size_t>(n_classes));
  Eigen::VectorXd bias(n_classes);
  std::vector<BinaryDiagnostics> diagnostics(static_cast<std::size_t>(n_classes));
  const int workers = detail::resolve_threads(options.threads);
  detail::parallel_for(static_cast<std::size_t>(n_classes), options.threads, [&](std::size_t c) {
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) y[i] = labels[i] == static_cast<int>(c) ? 1 : -1;
    double b = 0.0;
    if (full) {
      FullKernel k(gram);
      diagnostics[c] = smo(k, y, options.C, options, alphas[c], b);
    } else {
      RowCache k(features, sigma2, options.row_cache_bytes / static_cast<std::size_t>(workers));
      diagnostics[c] = smo(k, y, options.C, options, alphas[c], b);
    }
    diagnostics[c].cls = static_cast<int>(c);
    bias[static_cast<Eigen::Index>(c)] = b;
  });
  for (const auto& d : diagnostics) {
    if (!d.converged && options.fail_on_nonconvergence) {
      throw ClassifierError("non-convergence: class " + std::to_string(d.cls) + " stopped after " +
                            std::to_string(d.iterations) + " iterations with gap " + std::to_string(d.gap));
    }
  }

  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (const auto& a : alphas) {
      if (a[i] > 0.0) {
        sv.push_back(i);
        break;
      }
    }
  }
  KernelModel model;
  model.sigma2 = sigma2;
  model.C = options.C;
  model.n_classes = n_classes;
  model.support.resize(static_cast<Eigen::Index>(sv.size()), features.cols());
  model.coef.resize(static_cast<Eigen::Index>(sv.size()), n_classes);
  for (std::size_t s = 0; s < sv.size(); ++s) {
    const auto row = static_cast<Eigen::Index>(s);
    model.support.row(row) = features.row(sv[s]);
    for (int c = 0; c < n_classes; ++c) {
      model.coef(row, c) = (labels[sv[s]] == c ? 1.0 : -1.0) * alphas[c][sv[s]];
    }
  }
  model.bias = bias;
  model.diagnostics = std::move(diagnostics);
  return model;
}

Eigen::MatrixXd decision_values(const KernelModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != model.dim()) {
    throw ClassifierError("dimension-mismatch: model expects " + std::to_string(model.dim()) + " features, got " +
                          std::to_string(features.cols()));
  }
  Eigen::MatrixXd out = kernel_matrix(features, model.support, model.sigma2) * model.coef;
  out.rowwise() += model.bias.transpose();
  return out;
}

std::vector<int> predict(const KernelModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd f = decision_values(model, features);
  std::vector<int> out(static_cast<std::size_t>(f.rows()));
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < f.cols(); ++c) {
      if (f(i, c) > f(i, best)) best = c;
    }
    out[i] = best;
  }
  return out;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw ClassifierError("accuracy needs equal, nonempty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

void write_model(LittleEndianWriter& w, const KernelModel& model) {
  w.magic(kModelMagic);
  w.u32(kModelFormatVersion);
  w.f64(model.sigma2);
  w.f64(model.C);
  w.i32(model.n_classes);
  w.u64(static_cast<std::uint64_t>(model.support.rows()));
  w.u64(static_cast<std::uint64_t>(model.support.cols()));
  w.f64s({model.support.data(), static_cast<std::size_t>(model.support.size())});
  w.f64s({model.coef.data(), static_cast<std::size_t>(model.coef.size())});
  w.f64s({model.bias.data(), static_cast<std::size_t>(model.bias.size())});
  for (const auto& d : model.diagnostics) {
    w.i32(d.cls);
    w.u64(static_cast<std::uint64_t>(d.iterations));
    w.f64(d.gap);
    w.u8(d.converged ? 1 : 0);
    w.f64(d.dual_objective);
  }
}

KernelModel read_model(LittleEndianReader& r) {
  r.expect_magic(kModelMagic);
  if (const auto version = r.u32(); version != kModelFormatVersion) {
    throw FormatError("unsupported model format version " + std::to_string(version));
  }
  KernelModel m;
  m.sigma2 = r.f64();
  m.C = r.f64();
  m.n_classes = r.i32();
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  if (m.n_classes < 0 || rows < 0 || cols < 0 || rows > (std::int64_t{1} << 32) || cols > (std::int64_t{1} << 32)) {
    throw FormatError("corrupt model header");
  }
  m.support.resize(rows, cols);
  m.coef.resize(rows, m.n_classes);
  m.bias.resize(m.n_classes);
  r.f64s_into({m.support.data(), static_cast<std::size_t>(m.support.size())});
  r.f64s_into({m.coef.data(), static_cast<std::size_t>(m.coef.size())});
  r.f64s_into({m.bias.data(), static_cast<std::size_t>(m.bias.size())});
  for (int c = 0; c < m.n_classes; ++c) {
    BinaryDiagnostics d;
    d.cls = r.i32();
    d.iterations = static_cast<std::int64_t>(r.u64());
    d.gap = r.f64();
    d.converged = r.u8() != 0;
    d.dual_objective = r.f64();
    m.diagnostics.push_back(d);
  }
  return m;
}

void save_model(const KernelModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  LittleEndianWriter w(out);
  write_model(w, model);
}

KernelModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LittleEndianReader r(in);
  return read_model(r);
}

}  // namespace rotoscat
