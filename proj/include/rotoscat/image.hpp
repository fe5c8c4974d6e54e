// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rotoscat {

/// Multi-channel image, channel-planar, each plane row-major.
/// Pixel values are expected in [0, 1] after ingestion.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);
  Image(int width, int height, int channels, std::vector<double> data);

  /// Square image of the given side with every sample set to `value`.
  static Image constant(int side, int channels, double value);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  bool is_square() const { return width_ == height_; }
  /// True when square with a power-of-two side.
  bool is_dyadic_square() const;
  /// log2 of the side; throws unless is_dyadic_square().
  int log2_side() const;

  double& at(int channel, int row, int col) { return data_[index(channel, row, col)]; }
  double at(int channel, int row, int col) const { return data_[index(channel, row, col)]; }

  std::span<double> plane(int channel);
  std::span<const double> plane(int channel) const;

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  /// Image made of a single plane of this one.
  Image channel_image(int channel) const;

 private:
  std::size_t index(int channel, int row, int col) const {
    return (static_cast<std::size_t>(channel) * height_ + row) * width_ + col;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Square real frame at some sampling rate of the original grid.
struct Frame {
  int side = 0;
  std::vector<double> values;  // row-major side x side

  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * side + col]; }
};

bool is_power_of_two(int n);
int log2_exact(int n);

}  // namespace rotoscat
