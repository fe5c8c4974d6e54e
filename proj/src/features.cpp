// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "parallel.hpp"
#include "rotoscat/binary_io.hpp"

namespace rotoscat {
namespace {

constexpr std::array<char, 4> kBasisMagic{'R', 'S', 'O', 'B'};
constexpr std::size_t kEpsilonSample = std::size_t{1} << 20;

// Selection for one class in standardized coordinates.
struct ClassSelection {
  std::vector<int> features;
  Eigen::MatrixXd weights;  // k x k, column i expresses q_i over the selected columns
  std::vector<double> residuals;
  bool truncated = false;
};

ClassSelection select_class(const Eigen::MatrixXd& z, const std::vector<char>& alive, const std::vector<int>& labels,
                            int cls, const OlsOptions& options) {
  const Eigen::Index n = z.rows();
  const Eigen::Index dim = z.cols();
  Eigen::VectorXd t(n);
  Eigen::Index members = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = labels[i] == cls ? 1.0 : 0.0;
    members += labels[i] == cls;
  }
  if (members == 0) throw FeatureError("degenerate-class: class " + std::to_string(cls) + " has no training sample");
  if (members == n) throw FeatureError("degenerate-class: class " + std::to_string(cls) + " holds every sample");
  t.array() -= static_cast<double>(members) / static_cast<double>(n);

  Eigen::VectorXd corr = z.transpose() * t;
  Eigen::VectorXd norm2(dim);
  for (Eigen::Index p = 0; p < dim; ++p) norm2[p] = alive[p] ? 1.0 : 0.0;

  const int steps = options.per_class;
  ClassSelection out;
  Eigen::MatrixXd q(n, steps);
  out.weights = Eigen::MatrixXd::Zero(steps, steps);
  out.residuals.push_back(t.squaredNorm());

  for (int k = 0; k < steps; ++k) {
    Eigen::Index best = -1;
    double best_score = -1.0;
    for (Eigen::Index p = 0; p < dim; ++p) {
      if (norm2[p] <= options.dead_tolerance) continue;
      const double score = std::abs(corr[p]) / std::sqrt(norm2[p]);
      if (score > best_score) {
        best_score = score;
        best = p;
      }
    }
    if (best < 0) {
      out.truncated = true;
      break;
    }

    // Twice-iterated classical Gram-Schmidt against the basis built so far.
    Eigen::VectorXd v = z.col(best);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
    for (int pass = 0; pass < 2 && k > 0; ++pass) {
      const Eigen::VectorXd h = q.leftCols(k).transpose() * v;
      v.noalias() -= q.leftCols(k) * h;
      g += h;
    }
    const double nu = v.norm();
    if (nu <= std::sqrt(options.dead_tolerance)) {
      // Tracked norm drifted above the true one; drop the column and retry.
      norm2[best] = 0.0;
      --k;
      continue;
    }
    q.col(k) = v / nu;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(steps);
    w[k] = 1.0;
    if (k > 0) w.head(k).noalias() -= out.weights.topLeftCorner(k, k) * g;
    out.weights.col(k) = w / nu;
    out.features.push_back(static_cast<int>(best));

    const double tq = t.dot(q.col(k));
    out.residuals.push_back(std::max(0.0, out.residuals.back() - tq * tq));
    const Eigen::VectorXd c = z.transpose() * q.col(k);
    corr.noalias() -= tq * c;
    norm2.array() -= c.array().square();
    norm2[best] = 0.0;
  }
  const int selected = static_cast<int>(out.features.size());
  out.weights.conservativeResize(selected, selected);
  return out;
}

}  // namespace

void FeatureMatrix::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != values.rows()) {
    throw FeatureError("feature matrix has " + std::to_string(values.rows()) + " rows but " +
                       std::to_string(labels.size()) + " labels");
  }
  for (int label : labels) {
    if (label < 0 || label >= n_classes) throw FeatureError("label " + std::to_string(label) + " out of range");
  }
  if (!values.allFinite()) throw FeatureError("feature matrix has non-finite entries");
}

double relative_log_epsilon(const Eigen::MatrixXd& values, double relative) {
  const std::size_t total = static_cast<std::size_t>(values.size());
  const std::size_t stride = std::max<std::size_t>(1, (total + kEpsilonSample - 1) / kEpsilonSample);
  std::vector<double> sample;
  sample.reserve(std::min(total, kEpsilonSample));
  const double* data = values.data();
  for (std::size_t i = 0; i < total; i += stride) {
    if (data[i] != 0.0) sample.push_back(std::abs(data[i]));
  }
  if (sample.empty()) return relative;
  auto mid = sample.begin() + static_cast<std::ptrdiff_t>(sample.size() / 2);
  std::nth_element(sample.begin(), mid, sample.end());
  return relative * *mid;
}

void log_transform_inplace(Eigen::MatrixXd& values, double epsilon, std::span<const char> mask) {
  if (!(epsilon > 0.0)) throw FeatureError("log epsilon must be positive");
  if (!mask.empty() && static_cast<Eigen::Index>(mask.size()) != values.cols()) {
    throw FeatureError("log mask length does not match the feature dimension");
  }
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    if (!mask.empty() && !mask[c]) continue;
    auto col = values.col(c);
    if (col.minCoeff() < 0.0) {
      throw FeatureError("negative-entry: column " + std::to_string(c) + " has a negative value");
    }
    col = (col.array() + epsilon).log();
  }
}

FeatureMatrix log_transform(FeatureMatrix features, double epsilon, std::span<const char> mask) {
  log_transform_inplace(features.values, epsilon, mask);
  return features;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& values, double tolerance) {
  if (values.rows() == 0) throw FeatureError("cannot standardize an empty matrix");
  Standardizer s;
  s.mean = values.colwise().mean().transpose();
  s.inv_norm.resize(values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double norm = (values.col(c).array() - s.mean[c]).matrix().norm();
    s.inv_norm[c] = norm > tolerance ? 1.0 / norm : 0.0;
  }
  return s;
}

void Standardizer::apply(Eigen::MatrixXd& values) const {
  if (values.cols() != mean.size()) throw FeatureError("dimension-mismatch: standardizer fitted on another width");
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    values.col(c) = (values.col(c).array() - mean[c]) * inv_norm[c];
  }
}

SelectedBasis ols_select(const FeatureMatrix& features, const OlsOptions& options) {
  features.validate();
  return ols_select(features.values, features.labels, features.n_classes, options);
}

SelectedBasis ols_select(const Eigen::MatrixXd& values, const std::vector<int>& labels, int n_classes,
                         const OlsOptions& options) {
  if (static_cast<Eigen::Index>(labels.size()) != values.rows()) throw FeatureError("label count does not match rows");
  for (int l : labels) {
    if (l < 0 || l >= n_classes) throw FeatureError("label " + std::to_string(l) + " out of range");
  }
  if (!values.allFinite()) throw FeatureError("feature matrix has non-finite entries");
  if (options.per_class < 1) throw FeatureError("per_class must be at least 1");
  if (options.per_class > std::min(values.rows(), values.cols())) {
    throw FeatureError("per_class exceeds min(n, D)");
  }
  const auto standardizer = Standardizer::fit(values);
  Eigen::MatrixXd z = values;
  standardizer.apply(z);
  std::vector<char> alive(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index c = 0; c < z.cols(); ++c) alive[c] = standardizer.inv_norm[c] > 0.0;

  std::vector<ClassSelection> per_class(static_cast<std::size_t>(n_classes));
  detail::parallel_for(per_class.size(), options.threads, [&](std::size_t c) {
    per_class[c] = select_class(z, alive, labels, static_cast<int>(c), options);
  });

  SelectedBasis basis;
  basis.input_dim = static_cast<int>(values.cols());
  basis.n_classes = n_classes;
  std::map<int, int> slot;
  for (const auto& sel : per_class) {
    for (int f : sel.features) slot.emplace(f, 0);
  }
  for (auto& [f, s] : slot) {
    s = static_cast<int>(basis.support.size());
    basis.support.push_back(f);
  }
  const auto support_size = static_cast<Eigen::Index>(basis.support.size());
  basis.mean.resize(support_size);
  basis.inv_norm.resize(support_size);
  for (Eigen::Index s = 0; s < support_size; ++s) {
    basis.mean[s] = standardizer.mean[basis.support[s]];
    basis.inv_norm[s] = standardizer.inv_norm[basis.support[s]];
  }
  Eigen::Index total = 0;
  for (const auto& sel : per_class) total += static_cast<Eigen::Index>(sel.features.size());
  basis.weights = Eigen::MatrixXd::Zero(support_size, total);
  Eigen::Index m = 0;
  for (int c = 0; c < n_classes; ++c) {
    const auto& sel = per_class[c];
    for (std::size_t k = 0; k < sel.features.size(); ++k, ++m) {
      for (std::size_t i = 0; i <= k; ++i) basis.weights(slot.at(sel.features[i]), m) = sel.weights(i, k);
      basis.owner_class.push_back(c);
      basis.rank.push_back(static_cast<int>(k));
      basis.feature.push_back(sel.features[k]);
    }
    basis.residuals.push_back(sel.residuals);
    if (sel.truncated) basis.truncated_classes.push_back(c);
  }
  return basis;
}

Eigen::MatrixXd project(const SelectedBasis& basis, const Eigen::MatrixXd& values) {
  if (values.cols() != basis.input_dim) {
    throw FeatureError("dimension-mismatch: basis expects " + std::to_string(basis.input_dim) + " features, got " +
                       std::to_string(values.cols()));
  }
  Eigen::MatrixXd gathered(values.rows(), static_cast<Eigen::Index>(basis.support.size()));
  for (Eigen::Index s = 0; s < gathered.cols(); ++s) {
    gathered.col(s) = (values.col(basis.support[s]).array() - basis.mean[s]) * basis.inv_norm[s];
  }
  return gathered * basis.weights;
}

void write_basis(LittleEndianWriter& w, const SelectedBasis& basis) {
  w.magic(kBasisMagic);
  w.u32(kBasisFormatVersion);
  w.i32(basis.input_dim);
  w.i32(basis.n_classes);
  w.u64(basis.support.size());
  w.u64(basis.owner_class.size());
  for (int s : basis.support) w.i32(s);
  w.f64s({basis.mean.data(), static_cast<std::size_t>(basis.mean.size())});
  w.f64s({basis.inv_norm.data(), static_cast<std::size_t>(basis.inv_norm.size())});
  w.f64s({basis.weights.data(), static_cast<std::size_t>(basis.weights.size())});
  for (std::size_t m = 0; m < basis.owner_class.size(); ++m) {
    w.i32(basis.owner_class[m]);
    w.i32(basis.rank[m]);
    w.i32(basis.feature[m]);
  }
  for (const auto& r : basis.residuals) {
    w.u64(r.size());
    w.f64s(r);
  }
  w.u64(basis.truncated_classes.size());
  for (int c : basis.truncated_classes) w.i32(c);
}

SelectedBasis read_basis(LittleEndianReader& r) {
  r.expect_magic(kBasisMagic);
  if (const auto version = r.u32(); version != kBasisFormatVersion) {
    throw FormatError("unsupported basis format version " + std::to_string(version));
  }
  SelectedBasis b;
  b.input_dim = r.i32();
  b.n_classes = r.i32();
  const auto support = static_cast<Eigen::Index>(r.u64());
  const auto m = static_cast<Eigen::Index>(r.u64());
  if (b.input_dim < 0 || b.n_classes < 0 || support > b.input_dim) throw FormatError("corrupt basis header");
  b.support.resize(static_cast<std::size_t>(support));
  for (auto& s : b.support) {
    s = r.i32();
    if (s < 0 || s >= b.input_dim) throw FormatError("basis support index out of range");
  }
  b.mean.resize(support);
  b.inv_norm.resize(support);
  b.weights.resize(support, m);
  r.f64s_into({b.mean.data(), static_cast<std::size_t>(support)});
  r.f64s_into({b.inv_norm.data(), static_cast<std::size_t>(support)});
  r.f64s_into({b.weights.data(), static_cast<std::size_t>(b.weights.size())});
  for (Eigen::Index i = 0; i < m; ++i) {
    b.owner_class.push_back(r.i32());
    b.rank.push_back(r.i32());
    b.feature.push_back(r.i32());
  }
  for (int c = 0; c < b.n_classes; ++c) {
    const auto len = r.u64();
    if (len > static_cast<std::uint64_t>(m) + 1) throw FormatError("corrupt residual table");
    b.residuals.push_back(r.f64s(static_cast<std::size_t>(len)));
  }
  const auto truncated = r.u64();
  if (truncated > static_cast<std::uint64_t>(b.n_classes)) throw FormatError("corrupt truncation list");
  for (std::uint64_t i = 0; i < truncated; ++i) b.truncated_classes.push_back(r.i32());
  return b;
}

void save_basis(const SelectedBasis& basis, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  LittleEndianWriter w(out);
  write_basis(w, basis);
}

SelectedBasis load_basis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  LittleEndianReader r(in);
  return read_basis(r);
}

void write_standardizer(LittleEndianWriter& w, const Standardizer& s) {
  w.u64(static_cast<std::uint64_t>(s.mean.size()));
  w.f64s({s.mean.data(), static_cast<std::size_t>(s.mean.size())});
  w.f64s({s.inv_norm.data(), static_cast<std::size_t>(s.inv_norm.size())});
}

Standardizer read_standardizer(LittleEndianReader& r) {
  const auto n = r.u64();
  if (n > (std::uint64_t{1} << 32)) throw FormatError("corrupt standardizer");
  Standardizer s;
  s.mean.resize(static_cast<Eigen::Index>(n));
  s.inv_norm.resize(static_cast<Eigen::Index>(n));
  r.f64s_into({s.mean.data(), static_cast<std::size_t>(n)});
  r.f64s_into({s.inv_norm.data(), static_cast<std::size_t>(n)});
  return s;
}

}  // namespace rotoscat
