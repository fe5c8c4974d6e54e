// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/image.hpp"

#include <utility>

namespace rotoscat {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

int log2_exact(int n) {
  if (!is_power_of_two(n)) throw std::invalid_argument("not a power of two");
  int d = 0;
  while ((1 << d) < n) ++d;
  return d;
}

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<double>(static_cast<std::size_t>(width) * height * channels, 0.0)) {}

Image::Image(int width, int height, int channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width < 0 || height < 0 || channels < 0) throw std::invalid_argument("image: negative dimension");
  if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
    throw std::invalid_argument("image: data size does not match dimensions");
  }
}

Image Image::constant(int side, int channels, double value) {
  return Image(side, side, channels,
               std::vector<double>(static_cast<std::size_t>(side) * side * channels, value));
}

bool Image::is_dyadic_square() const { return is_square() && is_power_of_two(width_); }

int Image::log2_side() const {
  if (!is_dyadic_square()) throw std::invalid_argument("image is not a dyadic square");
  return log2_exact(width_);
}

std::span<double> Image::plane(int channel) {
  const auto n = static_cast<std::size_t>(width_) * height_;
  return std::span<double>(data_).subspan(static_cast<std::size_t>(channel) * n, n);
}

std::span<const double> Image::plane(int channel) const {
  const auto n = static_cast<std::size_t>(width_) * height_;
  return std::span<const double>(data_).subspan(static_cast<std::size_t>(channel) * n, n);
}

Image Image::channel_image(int channel) const {
  auto p = plane(channel);
  return Image(width_, height_, 1, std::vector<double>(p.begin(), p.end()));
}

}  // namespace rotoscat
