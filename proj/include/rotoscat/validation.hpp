// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rotoscat/config.hpp"

namespace rotoscat {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Reported only; never fails the run.
  bool informational = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct ValidationOptions {
  std::uint64_t seed = 7;
  int contraction_pairs = 8;
  /// Scales wavelet (fault_j, fault_ell) by fault_factor before checking.
  bool inject_fault = false;
  int fault_j = 1;
  int fault_ell = 0;
  double fault_factor = 1.5;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  /// key=value lines, one block per check.
  std::string format() const;
};

/// Filter-bank, count, covariance and contraction checks at the geometry of
/// `config` (side 2^d, J, L, K, Morlet parameters).
ValidationReport run_validation(const PipelineConfig& config, const ValidationOptions& options = {});

}  // namespace rotoscat
