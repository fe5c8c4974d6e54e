// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "direct_scattering.hpp"

#include <cmath>
#include <numbers>

namespace rotoscat::oracle {

SpatialTaps inverse_dft(std::span<const Complex> spectrum, int side) {
  // Separable direct sums: rows then columns.
  std::vector<Complex> tw(side);
  for (int k = 0; k < side; ++k) tw[k] = std::polar(1.0, 2.0 * std::numbers::pi * k / side);
  std::vector<Complex> tmp(spectrum.size());
  for (int k0 = 0; k0 < side; ++k0) {
    for (int n1 = 0; n1 < side; ++n1) {
      Complex acc = 0.0;
      for (int k1 = 0; k1 < side; ++k1) acc += spectrum[k0 * side + k1] * tw[(k1 * n1) % side];
      tmp[k0 * side + n1] = acc;
    }
  }
  SpatialTaps out{side, std::vector<Complex>(spectrum.size())};
  const double inv = 1.0 / (static_cast<double>(side) * side);
  for (int n0 = 0; n0 < side; ++n0) {
    for (int n1 = 0; n1 < side; ++n1) {
      Complex acc = 0.0;
      for (int k0 = 0; k0 < side; ++k0) acc += tmp[k0 * side + n1] * tw[(k0 * n0) % side];
      out.taps[n0 * side + n1] = acc * inv;
    }
  }
  return out;
}

SpatialTaps reduce(const SpatialTaps& full, int level, bool zero_mean) {
  const int s = 1 << level;
  const int side = full.side / s;
  SpatialTaps out{side, std::vector<Complex>(static_cast<std::size_t>(side) * side)};
  Complex mean = 0.0;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      const Complex v = full.taps[static_cast<std::size_t>(r * s) * full.side + c * s] * static_cast<double>(s * s);
      out.taps[static_cast<std::size_t>(r) * side + c] = v;
      mean += v;
    }
  }
  if (zero_mean) {
    mean /= static_cast<double>(out.taps.size());
    for (auto& v : out.taps) v -= mean;
  }
  return out;
}

std::vector<Complex> convolve_sampled(std::span<const Complex> x, const SpatialTaps& h, int stride) {
  const int side = h.side;
  const int out_side = side / stride;
  std::vector<Complex> out(static_cast<std::size_t>(out_side) * out_side);
  for (int p0 = 0; p0 < out_side; ++p0) {
    for (int p1 = 0; p1 < out_side; ++p1) {
      Complex acc = 0.0;
      for (int n0 = 0; n0 < side; ++n0) {
        const int d0 = ((stride * p0 - n0) % side + side) % side;
        for (int n1 = 0; n1 < side; ++n1) {
          const int d1 = ((stride * p1 - n1) % side + side) % side;
          acc += x[n0 * side + n1] * h.taps[d0 * side + d1];
        }
      }
      out[p0 * out_side + p1] = acc;
    }
  }
  return out;
}

namespace {

std::vector<Complex> to_complex(std::span<const double> v) { return {v.begin(), v.end()}; }

std::vector<double> modulus(const std::vector<Complex>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::abs(v[i]);
  return out;
}

std::vector<double> real_part(const std::vector<Complex>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

std::vector<Complex> inverse_dft_1d(std::span<const Complex> spectrum) {
  const int n = static_cast<int>(spectrum.size());
  std::vector<Complex> out(n);
  for (int m = 0; m < n; ++m) {
    Complex acc = 0.0;
    for (int k = 0; k < n; ++k) acc += spectrum[k] * std::polar(1.0, 2.0 * std::numbers::pi * ((k * m) % n) / n);
    out[m] = acc / static_cast<double>(n);
  }
  return out;
}

}  // namespace

DirectScattering::DirectScattering(const SpatialFilterBank& spatial, const AngularFilterBank& angular)
    : spatial_(spatial), angular_(angular) {
  const int side = spatial.side();
  for (int j = 1; j <= spatial.max_scale(); ++j) {
    for (int ell = 0; ell < spatial.orientations(); ++ell) wavelets_.push_back(inverse_dft(spatial.wavelet(j, ell), side));
    lowpasses_.push_back(inverse_dft(spatial.lowpass(j), side));
  }
  angular_taps_.push_back(inverse_dft_1d(angular.lowpass_spectrum()));
  for (int k = 1; k <= angular.max_scale(); ++k) angular_taps_.push_back(inverse_dft_1d(angular.wavelet_spectrum(k)));
}

std::vector<double> DirectScattering::first_order(std::span<const double> plane, int j, int ell) const {
  const auto& h = wavelets_[(j - 1) * spatial_.orientations() + ell];
  return modulus(convolve_sampled(to_complex(plane), h, 1 << (j - 1)));
}

std::vector<double> DirectScattering::lowpass(std::span<const double> plane, int j) const {
  return real_part(convolve_sampled(to_complex(plane), lowpasses_[j - 1], 1 << (j - 1)));
}

std::vector<double> DirectScattering::average(std::span<const double> frame, int level) const {
  const int J = spatial_.max_scale();
  const auto h = reduce(lowpasses_[J - 1], level, false);
  return real_part(convolve_sampled(to_complex(frame), h, 1 << (J - level)));
}

std::vector<double> DirectScattering::second_order(const std::vector<std::vector<std::vector<double>>>& u,
                                                   const Path& p) const {
  const int L = spatial_.orientations();
  const int level1 = p.j1 - 1;
  const auto g = reduce(wavelets_[(p.j2 - 1) * L + p.beta], level1, true);
  const int stride = 1 << (p.j2 - p.j1);
  std::vector<std::vector<Complex>> v;
  for (int ell = 0; ell < L; ++ell) v.push_back(convolve_sampled(to_complex(u[p.j1 - 1][ell]), g, stride));
  if (p.k == Path::kUnused) return modulus(v[p.theta]);
  const auto& a = angular_taps_[p.k];
  std::vector<Complex> z(v[0].size());
  for (int m = 0; m < L; ++m) {
    const Complex w = a[((p.theta - m) % L + L) % L];
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += w * v[m][i];
  }
  return modulus(z);
}

std::map<Path, std::vector<double>> DirectScattering::scatter(const Image& x, const ScatteringConfig& config) const {
  std::map<Path, std::vector<double>> out;
  const auto paths = enumerate_paths(config, x.channels());
  for (int c = 0; c < x.channels(); ++c) {
    const auto plane = x.plane(c);
    std::vector<std::vector<std::vector<double>>> u(config.max_scale);
    for (int j = 1; j <= config.max_scale; ++j) {
      for (int ell = 0; ell < config.orientations; ++ell) u[j - 1].push_back(first_order(plane, j, ell));
    }
    for (const auto& p : paths) {
      if (p.channel != c) continue;
      if (p.order == 0) {
        out[p] = average(plane, 0);
      } else if (p.order == 1) {
        out[p] = average(u[p.j1 - 1][p.theta], p.j1 - 1);
      } else {
        out[p] = average(second_order(u, p), p.j2 - 1);
      }
    }
  }
  return out;
}

}  // namespace rotoscat::oracle
