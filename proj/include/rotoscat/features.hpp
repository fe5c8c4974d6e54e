// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include "rotoscat/binary_io.hpp"

namespace rotoscat {

/// Raised for inputs the feature stage refuses: negative log arguments, missing
/// classes, shape mismatches.
class FeatureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// n samples x D features with one class id per row.
struct FeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<int> labels;
  int n_classes = 0;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
  /// Throws FeatureError on non-finite entries, a label count that does not
  /// match the rows, or a label outside [0, n_classes).
  void validate() const;
};

/// Relative log floor: `relative` times the median of the nonzero absolute
/// entries. Large matrices are sampled on a fixed stride (at most 2^20
/// entries), so the result is deterministic. Returns `relative` when every
/// entry is zero.
double relative_log_epsilon(const Eigen::MatrixXd& values, double relative = 1e-6);

/// v -> log(epsilon + v) on the columns selected by `mask` (all columns when
/// the mask is empty). Negative entries in those columns throw FeatureError.
void log_transform_inplace(Eigen::MatrixXd& values, double epsilon, std::span<const char> mask = {});
FeatureMatrix log_transform(FeatureMatrix features, double epsilon, std::span<const char> mask = {});

/// Per-column centering and scaling to unit L2 norm over the fitting set.
/// Columns whose centered norm is below `tolerance` are dead: their scale is
/// zero and they map to 0.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_norm;

  static Standardizer fit(const Eigen::MatrixXd& values, double tolerance = 1e-12);
  void apply(Eigen::MatrixXd& values) const;
};

struct OlsOptions {
  int per_class = 10;
  /// Squared residual norm under which a standardized dictionary column no
  /// longer counts as a candidate.
  double dead_tolerance = 1e-10;
  int threads = 1;
};

/// M selected functionals f_m(x) = sum_s weights(s, m) (x[support[s]] - mean[s]) * inv_norm[s].
/// Functionals are affine in x because the training features are centered.
struct SelectedBasis {
  int input_dim = 0;
  int n_classes = 0;
  std::vector<int> support;
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_norm;
  Eigen::MatrixXd weights;  // support.size() x M

  std::vector<int> owner_class;  // per functional
  std::vector<int> rank;         // selection step within the owner class, 0-based
  std::vector<int> feature;      // selected input column
  /// residuals[c][k]: squared norm of the centered class indicator after k
  /// selections (k = 0 is the initial norm).
  std::vector<std::vector<double>> residuals;
  /// Classes that ran out of live dictionary columns before per_class steps.
  std::vector<int> truncated_classes;

  int size() const { return static_cast<int>(owner_class.size()); }
};

/// Supervised greedy orthogonal least squares, one pass per class over the
/// standardized dictionary. Each step picks the column whose decorrelated,
/// renormalized residual has the largest |correlation| with the centered
/// one-vs-all indicator; ties go to the lowest column index.
SelectedBasis ols_select(const FeatureMatrix& features, const OlsOptions& options);
SelectedBasis ols_select(const Eigen::MatrixXd& values, const std::vector<int>& labels, int n_classes,
                         const OlsOptions& options);

/// n x M evaluations of the selected functionals.
Eigen::MatrixXd project(const SelectedBasis& basis, const Eigen::MatrixXd& values);

void write_basis(LittleEndianWriter& w, const SelectedBasis& basis);
SelectedBasis read_basis(LittleEndianReader& r);
void save_basis(const SelectedBasis& basis, const std::filesystem::path& path);
SelectedBasis load_basis(const std::filesystem::path& path);

void write_standardizer(LittleEndianWriter& w, const Standardizer& s);
Standardizer read_standardizer(LittleEndianReader& r);

inline constexpr std::uint32_t kBasisFormatVersion = 1;

}  // namespace rotoscat
