// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rotoscat/filter_bank.hpp"
#include "rotoscat/image.hpp"

namespace rotoscat {

struct ScatteringConfig {
  int max_scale = 3;       // J
  int orientations = 8;    // L
  int angular_scales = 2;  // K, 2^K = L/2 by default
  int max_order = 2;       // 1 or 2
  bool roto_translation = true;

  bool operator==(const ScatteringConfig&) const = default;
};

/// Standard defaults for an image of side 2^d: J = d - 2, L = 8, 2^K = L/2.
ScatteringConfig default_scattering_config(int log2_side);

/// Index tuple of one coefficient map. Unused fields hold kUnused.
/// theta is the orientation index ell (angle ell*pi/L) of the stored sample;
/// k = 0 marks the angular low-pass band, k = kUnused a translation-only path.
struct Path {
  static constexpr int kUnused = -1;

  int order = 0;
  int channel = 0;
  int j1 = kUnused;
  int theta = kUnused;
  int j2 = kUnused;
  int beta = kUnused;
  int k = kUnused;

  auto operator<=>(const Path&) const = default;
  std::string to_string() const;
};

/// First wavelet-modulus layer of one channel.
struct Layer1 {
  int max_scale = 0;
  int orientations = 0;
  /// lowpass[j-1] = x * phi_j sampled at 2^(j-1).
  std::vector<Frame> lowpass;
  /// band[j-1][ell] = |x * psi_{j,ell}| sampled at 2^(j-1).
  std::vector<std::vector<Frame>> band;

  const Frame& at(int j, int ell) const { return band[j - 1][ell]; }
};

/// Second layer: |x1_{j1} * psi_{j2,beta,k}| sampled at 2^(j2-1) in space and
/// at the band's angular rate.
struct Layer2Frame {
  Path path;        // order 2, channel 0
  int level = 0;    // spatial sampling rate 2^level, level = j2 - 1
  Frame frame;
};

struct Layer2 {
  std::vector<Layer2Frame> frames;
};

/// Averaged coefficients of a whole image, grid x grid values per path, in
/// lexicographic path order (order, channel, j1, theta, j2, beta, k).
class ScatteringOutput {
 public:
  ScatteringOutput() = default;
  ScatteringOutput(int grid, std::vector<Path> paths, std::vector<double> values);

  int grid() const { return grid_; }
  std::size_t path_count() const { return paths_.size(); }
  std::span<const Path> paths() const { return paths_; }
  /// grid*grid values of path i, row-major.
  std::span<const double> coefficients(std::size_t i) const;
  /// Flat feature vector (path-major, grid row-major within a path).
  std::span<const double> flat() const { return values_; }
  std::size_t size() const { return values_.size(); }

  /// Coefficients (paths x grid^2) of the given order.
  std::size_t count_order(int order) const;

 private:
  int grid_ = 0;
  std::vector<Path> paths_;
  std::vector<double> values_;
};

/// |W1|: lowpass pyramid and first-order modulus maps of a single plane.
Layer1 wavelet_modulus_w1(const Image& plane, const SpatialFilterBank& bank);

/// |W2|: separable spatial x angular wavelet modulus of a first layer. With
/// roto_translation == false the angular filtering is skipped (k = kUnused).
Layer2 roto_translation_w2(const Layer1& layer1, const SpatialFilterBank& spatial,
                           const AngularFilterBank& angular, bool roto_translation = true);

/// A_J: convolution with phi_J and sampling at 2^J. `level` is the current
/// sampling rate 2^level of the frame.
Frame average_aj(const Frame& frame, int level, const SpatialFilterBank& bank);

/// S_J x for every channel.
ScatteringOutput scatter(const Image& x, const SpatialFilterBank& spatial, const AngularFilterBank& angular,
                         const ScatteringConfig& config);

/// Enumerates the output paths of `scatter` without computing anything.
std::vector<Path> enumerate_paths(const ScatteringConfig& config, int channels);

/// Frames at depth j for a gray image: 1 + L j + L^2 j (j - 1).
std::int64_t count_frames(int depth, int orientations);

struct CompletenessCheck {
  double value = 0.0;  // 2^-2J L^2 J^2
  bool complete = false;
};
CompletenessCheck completeness_check(int max_scale, int orientations);

}  // namespace rotoscat
