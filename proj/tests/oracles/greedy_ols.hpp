// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace rotoscat::oracle {

/// Exhaustive greedy orthogonal least squares for one class: every step
/// solves a least-squares fit for each candidate column and keeps the one with
/// the smallest residual (lowest index on exact ties). Columns are centered and
/// unit-normalized first; the target is the centered class indicator.
struct GreedyResult {
  std::vector<int> selected;
  std::vector<double> residuals;  // squared residual after 0, 1, ... steps
};
GreedyResult exhaustive_greedy(const Eigen::MatrixXd& x, const std::vector<int>& labels, int cls, int steps,
                               double dead_tolerance = 1e-10);

/// Literal replay of the dictionary recursion: pick the column of maximal
/// |correlation| with the target, subtract its component from every column,
/// renormalize, repeat. Each dictionary column carries its explicit
/// D-dimensional functional over standardized inputs.
struct ReplayResult {
  std::vector<int> selected;
  Eigen::MatrixXd functionals;  // D x steps, over standardized coordinates
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_norm;
  /// Max |<phi_p, phi_selected>| over live columns right after each update.
  double worst_decorrelation = 0.0;

  /// Evaluates the functionals on raw rows.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};
ReplayResult replay_recursion(const Eigen::MatrixXd& x, const std::vector<int>& labels, int cls, int steps,
                              double dead_tolerance = 1e-10);

}  // namespace rotoscat::oracle
