// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rotoscat::oracle {

/// Exact maximum of the binary SVM dual
///   sum a - 1/2 a'Qa,  Q_ij = y_i y_j K_ij,  0 <= a <= C,  y'a = 0
/// by enumerating every split of the variables into {at 0, at C, free} and
/// solving the equality-constrained stationarity system on the free set.
/// Exponential in n; meant for n <= 10.
struct QpSolution {
  Eigen::VectorXd alpha;
  double objective = 0.0;
};
QpSolution exact_svm_dual(const Eigen::MatrixXd& kernel, const std::vector<int>& signs, double C);

double dual_objective(const Eigen::MatrixXd& kernel, const std::vector<int>& signs, const Eigen::VectorXd& alpha);

}  // namespace rotoscat::oracle
