// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "svm_qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rotoscat::oracle {

double dual_objective(const Eigen::MatrixXd& kernel, const std::vector<int>& signs, const Eigen::VectorXd& alpha) {
  const auto n = kernel.rows();
  Eigen::VectorXd ya(n);
  for (Eigen::Index i = 0; i < n; ++i) ya[i] = signs[i] * alpha[i];
  return alpha.sum() - 0.5 * ya.dot(kernel * ya);
}

QpSolution exact_svm_dual(const Eigen::MatrixXd& kernel, const std::vector<int>& signs, double C) {
  const int n = static_cast<int>(kernel.rows());
  if (n > 12) throw std::invalid_argument("exact_svm_dual is exponential; n must be <= 12");
  Eigen::MatrixXd q(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) q(i, j) = signs[i] * signs[j] * kernel(i, j);
  }
  QpSolution best;
  best.objective = -std::numeric_limits<double>::infinity();
  long total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  std::vector<int> state(static_cast<std::size_t>(n));
  for (long code = 0; code < total; ++code) {
    long c = code;
    std::vector<int> free_set;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 1) a[i] = C;
      if (state[i] == 2) free_set.push_back(i);
    }
    const int f = static_cast<int>(free_set.size());
    if (f > 0) {
      // [Q_FF  y_F] [a_F]   [1 - Q_FB a_B]
      // [y_F'  0  ] [nu ] = [  - y_B'a_B ]
      Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd rhs(f + 1);
      double yb = 0.0;
      for (int i = 0; i < n; ++i) yb += signs[i] * a[i];
      for (int r = 0; r < f; ++r) {
        const int i = free_set[r];
        for (int s = 0; s < f; ++s) sys(r, s) = q(i, free_set[s]);
        sys(r, f) = signs[i];
        sys(f, r) = signs[i];
        rhs[r] = 1.0 - q.row(i).dot(a);
      }
      rhs[f] = -yb;
      const Eigen::VectorXd sol = sys.completeOrthogonalDecomposition().solve(rhs);
      if ((sys * sol - rhs).norm() > 1e-9 * (1.0 + rhs.norm())) continue;
      for (int r = 0; r < f; ++r) a[free_set[r]] = sol[r];
    }
    bool feasible = true;
    double ya = 0.0;
    for (int i = 0; i < n; ++i) {
      if (a[i] < -1e-12 || a[i] > C + 1e-12) feasible = false;
      ya += signs[i] * a[i];
    }
    if (!feasible || std::abs(ya) > 1e-9) continue;
    const double obj = dual_objective(kernel, signs, a);
    if (obj > best.objective) {
      best.objective = obj;
      best.alpha = a;
    }
  }
  return best;
}

}  // namespace rotoscat::oracle
