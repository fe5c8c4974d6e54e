// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotoscat/filter_bank.hpp"
#include "rotoscat/scattering.hpp"

namespace rotoscat {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DatasetSpec {
  /// cifar10 | cifar100 | imagedir | synthetic
  std::string kind = "cifar10";
  std::string path;
  /// CIFAR subset mode; 0 keeps the full canonical split.
  int subset_train_per_class = 500;
  int subset_test_per_class = 200;
  /// Require the published CIFAR record counts and class balance.
  bool verify_counts = true;
  /// Class-per-directory corpora: training images per class, the rest tests.
  int train_per_class = 30;
  std::vector<std::string> exclude{"BACKGROUND_Google"};
  /// Synthetic oriented-texture corpus (tests and smoke runs).
  int synthetic_classes = 4;
  int synthetic_per_class = 20;

  bool operator==(const DatasetSpec&) const = default;
};

struct PipelineConfig {
  DatasetSpec dataset;
  int log2_side = 5;        // d
  int max_scale = 0;        // J; 0 means d - 2
  int orientations = 8;     // L
  int angular_scales = 0;   // K; 0 means 2^K = L/2
  int order = 2;
  bool roto_translation = true;
  bool yuv = true;
  MorletParams morlet;

  double log_epsilon_relative = 1e-6;
  bool ols = true;
  int feature_count = 2000;  // M
  int per_class = 0;         // 0 means M / n_classes
  /// Used when feature_count is 0: M = ratio * scattering dimension.
  double feature_ratio = 0.0;

  double svm_c = 1.0;
  double svm_tolerance = 1e-3;
  std::int64_t svm_max_iterations = 10'000'000;
  bool bandwidth_squared_norm = false;

  std::uint64_t seed = 0;
  int splits = 1;
  int threads = 0;
  std::string cache_dir;
  std::string filter_cache;

  bool operator==(const PipelineConfig&) const = default;

  /// J, K with defaults filled in.
  int resolved_max_scale() const;
  int resolved_angular_scales() const;
  ScatteringConfig scattering() const;
  /// Throws ConfigError ("config-invalid: ...") on inconsistent settings.
  void validate() const;
  /// OLS steps per class for a dataset of this dimension and class count.
  int resolved_per_class(std::int64_t dimension, int n_classes) const;
};

/// JSON text of every field, keys in fixed order.
std::string to_json(const PipelineConfig& config);
/// Starts from `base` and overrides the keys present in `json`. Unknown keys
/// are an error.
PipelineConfig from_json(const std::string& json, const PipelineConfig& base = {});

PipelineConfig load_config(const std::filesystem::path& path, const PipelineConfig& base = {});
void save_config(const PipelineConfig& config, const std::filesystem::path& path);

/// FNV-1a over the fields that determine a feature file (dataset, geometry,
/// color handling, filter parameters).
std::uint64_t transform_hash(const PipelineConfig& config);

}  // namespace rotoscat
