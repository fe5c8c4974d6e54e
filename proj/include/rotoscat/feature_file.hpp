// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rotoscat/scattering.hpp"

namespace rotoscat {

/// Transform geometry recorded with every feature matrix.
struct FeatureHeader {
  int log2_side = 0;
  ScatteringConfig scattering;
  int channels = 0;
  int grid = 4;
  bool yuv = false;
  std::uint64_t config_hash = 0;
  /// One entry per path; each path owns grid * grid consecutive columns.
  std::vector<Path> paths;

  std::size_t columns() const { return paths.size() * static_cast<std::size_t>(grid) * grid; }
  bool operator==(const FeatureHeader&) const = default;
};

enum class Partition : std::uint8_t { kTrain = 1, kTest = 2 };

/// Scattering features of a labeled image set.
struct FeatureSet {
  FeatureHeader header;
  Eigen::MatrixXd values;  // rows = images, columns = flattened ScatteringOutput
  std::vector<int> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> sources;
  /// Fixed assignment per row (canonical train/test splits); empty when the
  /// rows form one pool split at evaluation time.
  std::vector<Partition> partition;

  Eigen::Index rows() const { return values.rows(); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
  /// Path owning column c.
  const Path& column_path(Eigen::Index c) const;
  /// Keeps the paths accepted by `keep`, with their columns.
  FeatureSet select_paths(const std::function<bool(const Path&)>& keep) const;
};

inline constexpr std::uint32_t kFeatureFormatVersion = 1;

/// Binary container: magic, version, geometry, path table, class names,
/// sources, labels, then the row-major little-endian float64 matrix.
void save_features(const FeatureSet& features, const std::filesystem::path& path);
FeatureSet load_features(const std::filesystem::path& path);
/// Header only (no matrix read).
FeatureSet load_feature_header(const std::filesystem::path& path);

/// CSV with a header row naming each column by its path and grid cell,
/// then one row per image: source, label, values.
void export_features_csv(const FeatureSet& features, const std::filesystem::path& path);

/// Name of column c, e.g. "o2_c0_j1_t3_j2_b5_k1_r0c2".
std::string column_name(const FeatureHeader& header, std::size_t c);

}  // namespace rotoscat
