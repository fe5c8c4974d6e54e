// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "rotoscat/binary_io.hpp"

namespace rotoscat {

class ClassifierError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// exp(-|u - v|^2 / (2 sigma2)).
double gaussian_kernel(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& v,
                       double sigma2);

/// Dense kernel matrix between the rows of a and b.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double sigma2);

/// Mean Euclidean row norm (or mean squared norm). Throws on an empty matrix
/// and when the result is zero.
double estimate_bandwidth(const Eigen::MatrixXd& features, bool squared_norm = false);

struct SvmOptions {
  double C = 1.0;
  /// Stop when the maximal KKT violation m(alpha) - M(alpha) drops below this.
  double tolerance = 1e-3;
  std::int64_t max_iterations = 10'000'000;
  /// Full kernel matrix when n is at most this; an LRU row cache above.
  std::int64_t full_cache_limit = 20'000;
  std::size_t row_cache_bytes = std::size_t{512} << 20;
  bool fail_on_nonconvergence = true;
  int threads = 1;
};

struct BinaryDiagnostics {
  int cls = 0;
  std::int64_t iterations = 0;
  double gap = 0.0;
  bool converged = false;
  /// sum(alpha) - 1/2 alpha' Q alpha at the returned point.
  double dual_objective = 0.0;
};

/// One-vs-all Gaussian-kernel SVM. coef(s, c) = y_s alpha_s for class c.
struct KernelModel {
  double sigma2 = 0.0;
  double C = 0.0;
  int n_classes = 0;
  Eigen::MatrixXd support;  // n_sv x dim
  Eigen::MatrixXd coef;     // n_sv x n_classes
  Eigen::VectorXd bias;     // n_classes
  std::vector<BinaryDiagnostics> diagnostics;

  Eigen::Index dim() const { return support.cols(); }
};

/// Solves the n_classes binary problems (class c against the rest).
KernelModel train(const Eigen::MatrixXd& features, const std::vector<int>& labels, int n_classes, double sigma2,
                  const SvmOptions& options = {});

/// Binary dual solve on +1/-1 labels; alpha is returned in `alpha`, the
/// offset b in `bias` (decision = sum y alpha K + b).
BinaryDiagnostics solve_binary(const Eigen::MatrixXd& kernel, const std::vector<int>& signs, double C,
                               const SvmOptions& options, Eigen::VectorXd& alpha, double& bias);

/// n x n_classes decision values.
Eigen::MatrixXd decision_values(const KernelModel& model, const Eigen::MatrixXd& features);

/// Argmax of the decision values, lowest class id on ties.
std::vector<int> predict(const KernelModel& model, const Eigen::MatrixXd& features);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

void write_model(LittleEndianWriter& w, const KernelModel& model);
KernelModel read_model(LittleEndianReader& r);
void save_model(const KernelModel& model, const std::filesystem::path& path);
KernelModel load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelFormatVersion = 1;

}  // namespace rotoscat
