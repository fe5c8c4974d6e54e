// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "greedy_ols.hpp"

#include <cmath>
#include <limits>

namespace rotoscat::oracle {
namespace {

struct Standardized {
  Eigen::MatrixXd z;
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_norm;
  Eigen::VectorXd target;
};

Standardized standardize(const Eigen::MatrixXd& x, const std::vector<int>& labels, int cls) {
  Standardized s;
  const auto n = x.rows();
  s.mean = Eigen::VectorXd::Zero(x.cols());
  for (Eigen::Index i = 0; i < n; ++i) s.mean += x.row(i).transpose();
  s.mean /= static_cast<double>(n);
  s.z = x;
  s.inv_norm.resize(x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    double norm2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      s.z(i, c) -= s.mean[c];
      norm2 += s.z(i, c) * s.z(i, c);
    }
    s.inv_norm[c] = std::sqrt(norm2) > 1e-12 ? 1.0 / std::sqrt(norm2) : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s.z(i, c) *= s.inv_norm[c];
  }
  double members = 0.0;
  for (int l : labels) members += l == cls;
  s.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) s.target[i] = (labels[i] == cls ? 1.0 : 0.0) - members / static_cast<double>(n);
  return s;
}

// Squared residual of y after least squares on the given columns.
double residual2(const Eigen::MatrixXd& z, const std::vector<int>& cols, const Eigen::VectorXd& y) {
  if (cols.empty()) return y.squaredNorm();
  Eigen::MatrixXd a(z.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) a.col(static_cast<Eigen::Index>(i)) = z.col(cols[i]);
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(y);
  return (y - a * coef).squaredNorm();
}

}  // namespace

GreedyResult exhaustive_greedy(const Eigen::MatrixXd& x, const std::vector<int>& labels, int cls, int steps,
                               double dead_tolerance) {
  const auto s = standardize(x, labels, cls);
  GreedyResult out;
  out.residuals.push_back(s.target.squaredNorm());
  std::vector<char> used(static_cast<std::size_t>(x.cols()), 0);
  for (int k = 0; k < steps; ++k) {
    int best = -1;
    double best_res = std::numeric_limits<double>::infinity();
    for (Eigen::Index p = 0; p < x.cols(); ++p) {
      if (used[p] || s.inv_norm[p] == 0.0) continue;
      // A candidate inside the current span adds nothing and is skipped.
      if (residual2(s.z, out.selected, s.z.col(p)) <= dead_tolerance) continue;
      auto cols = out.selected;
      cols.push_back(static_cast<int>(p));
      const double r = residual2(s.z, cols, s.target);
      if (r < best_res) {
        best_res = r;
        best = static_cast<int>(p);
      }
    }
    if (best < 0) break;
    used[best] = 1;
    out.selected.push_back(best);
    out.residuals.push_back(best_res);
  }
  return out;
}

ReplayResult replay_recursion(const Eigen::MatrixXd& x, const std::vector<int>& labels, int cls, int steps,
                              double dead_tolerance) {
  const auto s = standardize(x, labels, cls);
  const auto dim = x.cols();
  Eigen::MatrixXd phi = s.z;
  Eigen::MatrixXd coef = Eigen::MatrixXd::Identity(dim, dim);
  std::vector<char> live(static_cast<std::size_t>(dim));
  for (Eigen::Index p = 0; p < dim; ++p) live[p] = s.inv_norm[p] != 0.0;

  ReplayResult out;
  out.mean = s.mean;
  out.inv_norm = s.inv_norm;
  out.functionals.resize(dim, 0);
  for (int k = 0; k < steps; ++k) {
    int best = -1;
    double best_corr = -1.0;
    for (Eigen::Index p = 0; p < dim; ++p) {
      if (!live[p]) continue;
      const double c = std::abs(s.target.dot(phi.col(p)));
      if (c > best_corr) {
        best_corr = c;
        best = static_cast<int>(p);
      }
    }
    if (best < 0) break;
    out.selected.push_back(best);
    out.functionals.conservativeResize(dim, k + 1);
    out.functionals.col(k) = coef.col(best);
    const Eigen::VectorXd chosen = phi.col(best);
    const Eigen::VectorXd chosen_coef = coef.col(best);
    live[best] = 0;
    for (Eigen::Index p = 0; p < dim; ++p) {
      if (!live[p]) continue;
      const double inner = chosen.dot(phi.col(p));
      phi.col(p) -= inner * chosen;
      coef.col(p) -= inner * chosen_coef;
      const double norm = phi.col(p).norm();
      if (norm * norm <= dead_tolerance) {
        live[p] = 0;
        continue;
      }
      phi.col(p) /= norm;
      coef.col(p) /= norm;
      out.worst_decorrelation = std::max(out.worst_decorrelation, std::abs(phi.col(p).dot(chosen)));
    }
  }
  return out;
}

Eigen::MatrixXd ReplayResult::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd z = x;
  for (Eigen::Index c = 0; c < z.cols(); ++c) z.col(c) = (z.col(c).array() - mean[c]) * inv_norm[c];
  return z * functionals;
}

}  // namespace rotoscat::oracle
