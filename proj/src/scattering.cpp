// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/scattering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rotoscat/fft.hpp"

namespace rotoscat {
namespace {

std::vector<Complex> multiply(std::span<const Complex> a, std::span<const Complex> b) {
  std::vector<Complex> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Frame modulus_frame(std::span<const Complex> spectrum, int side) {
  std::vector<Complex> spatial(spectrum.size());
  fft::inverse2d(spectrum, spatial, side);
  Frame f{side, std::vector<double>(spatial.size())};
  for (std::size_t i = 0; i < spatial.size(); ++i) f.values[i] = std::abs(spatial[i]);
  return f;
}

Frame real_frame(std::span<const Complex> spectrum, int side) {
  std::vector<Complex> spatial(spectrum.size());
  fft::inverse2d(spectrum, spatial, side);
  Frame f{side, std::vector<double>(spatial.size())};
  for (std::size_t i = 0; i < spatial.size(); ++i) f.values[i] = spatial[i].real();
  return f;
}

std::vector<Complex> spectrum_of(const Frame& f) {
  return fft::forward2d(std::span<const double>(f.values), f.side);
}

// Calls emit(path) for every second-order path of one channel in generation order.
template <typename Emit>
void for_each_order2(const ScatteringConfig& c, Emit&& emit) {
  const int L = c.orientations;
  for (int j1 = 1; j1 <= c.max_scale; ++j1) {
    for (int j2 = j1 + 1; j2 <= c.max_scale; ++j2) {
      for (int beta = 0; beta < L; ++beta) {
        if (!c.roto_translation) {
          for (int ell = 0; ell < L; ++ell) emit(Path{2, 0, j1, ell, j2, beta, Path::kUnused});
          continue;
        }
        for (int k = 0; k <= c.angular_scales; ++k) {
          const int rate = 1 << ((k == 0 ? c.angular_scales : k) - 1);
          for (int ell = 0; ell < L; ell += rate) emit(Path{2, 0, j1, ell, j2, beta, k});
        }
      }
    }
  }
}

}  // namespace

ScatteringConfig default_scattering_config(int log2_side) {
  ScatteringConfig c;
  c.max_scale = std::max(1, log2_side - 2);
  c.orientations = 8;
  c.angular_scales = 2;
  return c;
}

std::string Path::to_string() const {
  std::ostringstream s;
  s << "o" << order << "/c" << channel;
  if (j1 != kUnused) s << "/j1=" << j1;
  if (theta != kUnused) s << "/t=" << theta;
  if (j2 != kUnused) s << "/j2=" << j2;
  if (beta != kUnused) s << "/b=" << beta;
  if (k != kUnused) s << "/k=" << k;
  return s.str();
}

ScatteringOutput::ScatteringOutput(int grid, std::vector<Path> paths, std::vector<double> values)
    : grid_(grid), paths_(std::move(paths)), values_(std::move(values)) {
  if (values_.size() != paths_.size() * static_cast<std::size_t>(grid_) * grid_) {
    throw std::invalid_argument("scattering output: size mismatch");
  }
}

std::span<const double> ScatteringOutput::coefficients(std::size_t i) const {
  const auto n = static_cast<std::size_t>(grid_) * grid_;
  return std::span<const double>(values_).subspan(i * n, n);
}

std::size_t ScatteringOutput::count_order(int order) const {
  const auto paths = static_cast<std::size_t>(
      std::count_if(paths_.begin(), paths_.end(), [order](const Path& p) { return p.order == order; }));
  return paths * grid_ * grid_;
}

Layer1 wavelet_modulus_w1(const Image& plane, const SpatialFilterBank& bank) {
  if (plane.channels() != 1) throw std::invalid_argument("w1: expects a single plane");
  if (!plane.is_dyadic_square() || plane.width() != bank.side()) {
    throw std::invalid_argument("dimension-mismatch: image side does not match filter bank");
  }
  const int side = bank.side();
  const auto x_hat = fft::forward2d(plane.plane(0), side);

  Layer1 out;
  out.max_scale = bank.max_scale();
  out.orientations = bank.orientations();
  for (int j = 1; j <= bank.max_scale(); ++j) {
    const int factor = 1 << (j - 1);
    const int small = side / factor;
    out.lowpass.push_back(
        real_frame(fft::subsample_spectrum(multiply(x_hat, bank.lowpass(j)), side, factor), small));
    std::vector<Frame> bands;
    for (int ell = 0; ell < bank.orientations(); ++ell) {
      bands.push_back(
          modulus_frame(fft::subsample_spectrum(multiply(x_hat, bank.wavelet(j, ell)), side, factor), small));
    }
    out.band.push_back(std::move(bands));
  }
  return out;
}

Layer2 roto_translation_w2(const Layer1& layer1, const SpatialFilterBank& spatial,
                           const AngularFilterBank& angular, bool roto_translation) {
  const int L = spatial.orientations();
  if (layer1.orientations != L || layer1.max_scale != spatial.max_scale()) {
    throw std::invalid_argument("bank-mismatch: first layer and spatial bank disagree");
  }
  if (roto_translation && angular.orientations() != L) {
    throw std::invalid_argument("bank-mismatch: angular bank has a different L");
  }
  const int J = spatial.max_scale();
  Layer2 out;

  for (int j1 = 1; j1 < J; ++j1) {
    const int level1 = j1 - 1;
    const int side1 = spatial.side() >> level1;
    std::vector<std::vector<Complex>> u_hat;
    for (int ell = 0; ell < L; ++ell) {
      const auto& f = layer1.at(j1, ell);
      if (f.side != side1) throw std::invalid_argument("dimension-mismatch: first layer frame size");
      u_hat.push_back(spectrum_of(f));
    }
    for (int j2 = j1 + 1; j2 <= J; ++j2) {
      const int factor = 1 << (j2 - j1);
      const int side2 = side1 / factor;
      const auto n2 = static_cast<std::size_t>(side2) * side2;
      for (int beta = 0; beta < L; ++beta) {
        const auto g = spatial.wavelet(j2, beta, level1);
        // Spatial filtering then subsampling; the angular combination is
        // linear so it is applied on the reduced spectra.
        std::vector<std::vector<Complex>> y;
        y.reserve(L);
        for (int ell = 0; ell < L; ++ell) {
          y.push_back(fft::subsample_spectrum(multiply(u_hat[ell], g), side1, factor));
        }
        if (!roto_translation) {
          for (int ell = 0; ell < L; ++ell) {
            out.frames.push_back({Path{2, 0, j1, ell, j2, beta, Path::kUnused}, j2 - 1, modulus_frame(y[ell], side2)});
          }
          continue;
        }
        for (int k = 0; k <= angular.max_scale(); ++k) {
          const auto taps = k == 0 ? angular.lowpass_taps() : angular.wavelet_taps(k);
          const int rate = angular.rate(k);
          for (int out_ell = 0; out_ell < L; out_ell += rate) {
            std::vector<Complex> z(n2);
            for (int m = 0; m < L; ++m) {
              const Complex a = taps[((out_ell - m) % L + L) % L];
              const auto& ym = y[m];
              for (std::size_t i = 0; i < n2; ++i) z[i] += a * ym[i];
            }
            out.frames.push_back({Path{2, 0, j1, out_ell, j2, beta, k}, j2 - 1, modulus_frame(z, side2)});
          }
        }
      }
    }
  }
  return out;
}

Frame average_aj(const Frame& frame, int level, const SpatialFilterBank& bank) {
  const int J = bank.max_scale();
  if (level < 0 || level > J || frame.side != (bank.side() >> level)) {
    throw std::invalid_argument("dimension-mismatch: frame does not match its sampling level");
  }
  const int factor = 1 << (J - level);
  const auto y = multiply(spectrum_of(frame), bank.lowpass(J, level));
  return real_frame(fft::subsample_spectrum(y, frame.side, factor), frame.side / factor);
}

std::vector<Path> enumerate_paths(const ScatteringConfig& config, int channels) {
  std::vector<Path> paths;
  for (int c = 0; c < channels; ++c) {
    paths.push_back(Path{0, c});
    for (int j = 1; j <= config.max_scale; ++j) {
      for (int ell = 0; ell < config.orientations; ++ell) paths.push_back(Path{1, c, j, ell});
    }
    if (config.max_order >= 2) {
      for_each_order2(config, [&](Path p) {
        p.channel = c;
        paths.push_back(p);
      });
    }
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

ScatteringOutput scatter(const Image& x, const SpatialFilterBank& spatial, const AngularFilterBank& angular,
                         const ScatteringConfig& config) {
  if (!x.is_dyadic_square() || x.width() != spatial.side()) {
    throw std::invalid_argument("dimension-mismatch: image side does not match filter bank");
  }
  if (config.max_scale != spatial.max_scale() || config.orientations != spatial.orientations()) {
    throw std::invalid_argument("bank-mismatch: config and spatial bank disagree");
  }
  if (config.max_order < 1 || config.max_order > 2) throw std::invalid_argument("scattering order must be 1 or 2");
  const bool roto = config.roto_translation && config.max_order >= 2;
  if (roto && (angular.orientations() != config.orientations || angular.max_scale() != config.angular_scales)) {
    throw std::invalid_argument("bank-mismatch: config and angular bank disagree");
  }

  const int grid = spatial.side() >> spatial.max_scale();
  const auto per_path = static_cast<std::size_t>(grid) * grid;
  std::vector<Path> paths;
  std::vector<Frame> frames;

  for (int c = 0; c < x.channels(); ++c) {
    const Image plane = x.channel_image(c);
    paths.push_back(Path{0, c});
    frames.push_back(average_aj(Frame{plane.width(), std::vector<double>(plane.plane(0).begin(), plane.plane(0).end())},
                                0, spatial));
    const Layer1 l1 = wavelet_modulus_w1(plane, spatial);
    for (int j = 1; j <= spatial.max_scale(); ++j) {
      for (int ell = 0; ell < spatial.orientations(); ++ell) {
        paths.push_back(Path{1, c, j, ell});
        frames.push_back(average_aj(l1.at(j, ell), j - 1, spatial));
      }
    }
    if (config.max_order >= 2) {
      Layer2 l2 = roto_translation_w2(l1, spatial, angular, config.roto_translation);
      for (auto& f : l2.frames) {
        Path p = f.path;
        p.channel = c;
        paths.push_back(p);
        frames.push_back(average_aj(f.frame, f.level, spatial));
      }
    }
  }

  std::vector<std::size_t> order(paths.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return paths[a] < paths[b]; });
  std::vector<Path> sorted_paths;
  sorted_paths.reserve(paths.size());
  std::vector<double> values;
  values.reserve(paths.size() * per_path);
  for (auto i : order) {
    sorted_paths.push_back(paths[i]);
    values.insert(values.end(), frames[i].values.begin(), frames[i].values.end());
  }
  return ScatteringOutput(grid, std::move(sorted_paths), std::move(values));
}

std::int64_t count_frames(int depth, int orientations) {
  if (depth < 1) throw std::invalid_argument("count_frames: depth must be >= 1");
  const std::int64_t j = depth;
  const std::int64_t L = orientations;
  return 1 + L * j + L * L * j * (j - 1);
}

CompletenessCheck completeness_check(int max_scale, int orientations) {
  CompletenessCheck c;
  const double J = max_scale;
  const double L = orientations;
  c.value = std::ldexp(1.0, -2 * max_scale) * L * L * J * J;
  c.complete = c.value >= 1.0;
  return c;
}

}  // namespace rotoscat
