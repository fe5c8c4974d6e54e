// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#include "rotoscat/filter_bank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "rotoscat/binary_io.hpp"
#include "rotoscat/image.hpp"

namespace rotoscat {

std::string to_string(FrameNormalization n) {
  return n == FrameNormalization::kTight ? "tight" : "peak";
}

FrameNormalization frame_normalization_from_string(const std::string& s) {
  if (s == "tight") return FrameNormalization::kTight;
  if (s == "peak") return FrameNormalization::kPeak;
  throw std::invalid_argument("unknown frame normalization: " + s);
}

namespace {

using std::numbers::pi;

std::size_t at(int side, int r, int c) { return static_cast<std::size_t>(r) * side + c; }

int wrap(int k, int n) { return ((k % n) + n) % n; }

// Periodized sampled 2D Gabor function exp(-n'Cn + i xi <u_theta, n>) on an
// N x N grid. With xi = 0 this is the matching Gaussian envelope.
std::vector<Complex> periodized_gabor(int side, double sigma, double theta, double xi, double slant) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // C = R diag(1, slant^2) R^T / (2 sigma^2)
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const double c00 = (c * c + slant * slant * s * s) * inv;
  const double c01 = (c * s - slant * slant * c * s) * inv;
  const double c11 = (s * s + slant * slant * c * c) * inv;
  const double extent = 6.0 * sigma / std::min(slant, 1.0);
  const int copies = std::max(1, static_cast<int>(std::ceil(extent / side)));

  std::vector<Complex> out(static_cast<std::size_t>(side) * side);
  for (int r = 0; r < side; ++r) {
    for (int col = 0; col < side; ++col) {
      Complex acc = 0.0;
      for (int a = -copies; a <= copies; ++a) {
        const double x = r + static_cast<double>(a) * side;
        for (int b = -copies; b <= copies; ++b) {
          const double y = col + static_cast<double>(b) * side;
          const double quad = c00 * x * x + 2.0 * c01 * x * y + c11 * y * y;
          const double phase = xi * (c * x + s * y);
          acc += std::exp(Complex(-quad, phase));
        }
      }
      out[at(side, r, col)] = acc;
    }
  }
  return out;
}

std::vector<Complex> morlet_spectrum(int side, double sigma, double theta, double xi, double slant) {
  const auto g = periodized_gabor(side, sigma, theta, xi, slant);
  const auto e = periodized_gabor(side, sigma, theta, 0.0, slant);
  std::vector<Complex> gh(g.size()), eh(e.size());
  fft::forward2d(g, gh, side);
  fft::forward2d(e, eh, side);
  // Subtract the envelope so the DC bin vanishes on the discrete grid.
  const Complex ratio = gh[0] / eh[0];
  const double norm = slant / (2.0 * pi * sigma * sigma);
  for (std::size_t i = 0; i < gh.size(); ++i) gh[i] = (gh[i] - ratio * eh[i]) * norm;
  gh[0] = 0.0;
  return gh;
}

std::vector<Complex> gaussian_spectrum(int side, double sigma) {
  auto g = periodized_gabor(side, sigma, 0.0, 0.0, 1.0);
  double total = 0.0;
  for (const auto& v : g) total += v.real();
  for (auto& v : g) v = v.real() / total;
  std::vector<Complex> out(g.size());
  fft::forward2d(g, out, side);
  out[0] = 1.0;
  for (auto& v : out) v = v.real();
  return out;
}

// Spectrum of the filter rotated by +90 degrees on the sample grid.
std::vector<Complex> rotate_quarter(std::span<const Complex> spec, int side) {
  std::vector<Complex> out(spec.size());
  for (int k0 = 0; k0 < side; ++k0) {
    for (int k1 = 0; k1 < side; ++k1) out[at(side, k0, k1)] = spec[at(side, k1, wrap(-k0, side))];
  }
  return out;
}

// 1/2 (|psi(w)|^2 + |psi(-w)|^2) summed over a set of spectra.
std::vector<double> symmetric_energy(const std::vector<std::vector<Complex>>& spectra, int side) {
  std::vector<double> s(static_cast<std::size_t>(side) * side, 0.0);
  for (const auto& f : spectra) {
    for (int k0 = 0; k0 < side; ++k0) {
      for (int k1 = 0; k1 < side; ++k1) {
        const auto i = at(side, k0, k1);
        const auto m = at(side, wrap(-k0, side), wrap(-k1, side));
        s[i] += 0.5 * (std::norm(f[i]) + std::norm(f[m]));
      }
    }
  }
  return s;
}

}  // namespace

double SpatialFilterBank::wavelet_sigma(int j) const { return params_.sigma0 * std::ldexp(1.0, j - 1); }
double SpatialFilterBank::wavelet_frequency(int j) const { return params_.xi0 * std::ldexp(1.0, -(j - 1)); }
double SpatialFilterBank::lowpass_sigma(int j) const { return params_.sigma0 * std::ldexp(1.0, j); }

std::size_t SpatialFilterBank::wavelet_slot(int j, int ell) const {
  if (j < 1 || j > max_scale_ || ell < 0 || ell >= orientations_) {
    throw std::out_of_range("wavelet index out of range");
  }
  return static_cast<std::size_t>(j - 1) * orientations_ + ell;
}

SpatialFilterBank SpatialFilterBank::build(int log2_side, int max_scale, int orientations,
                                           const MorletParams& params) {
  if (log2_side < 1 || log2_side > 14) throw std::invalid_argument("invalid-dims: log2 side out of range");
  if (max_scale < 1 || max_scale > log2_side) throw std::invalid_argument("invalid-dims: need 1 <= J <= d");
  if (orientations < 2) throw std::invalid_argument("invalid-dims: need L >= 2");
  if (!(params.sigma0 > 0.0) || !(params.slant > 0.0) || !(params.xi0 > 0.0)) {
    throw std::invalid_argument("degenerate-params: envelope width, slant and frequency must be positive");
  }

  SpatialFilterBank bank;
  bank.log2_side_ = log2_side;
  bank.max_scale_ = max_scale;
  bank.orientations_ = orientations;
  bank.params_ = params;
  const int side = bank.side();
  const int L = orientations;

  std::vector<std::vector<Complex>> wavelets(static_cast<std::size_t>(max_scale) * L);
  for (int j = 1; j <= max_scale; ++j) {
    const double sigma = bank.wavelet_sigma(j);
    const double xi = bank.wavelet_frequency(j);
    for (int ell = 0; ell < L; ++ell) {
      auto& slot = wavelets[bank.wavelet_slot(j, ell)];
      // Orientations past pi/2 are exact grid rotations of earlier ones.
      if (L % 2 == 0 && ell >= L / 2) {
        slot = rotate_quarter(wavelets[bank.wavelet_slot(j, ell - L / 2)], side);
      } else {
        slot = morlet_spectrum(side, sigma, bank.angle(ell), xi, params.slant);
      }
    }
  }

  std::vector<std::vector<Complex>> lowpasses;
  for (int j = 1; j <= max_scale; ++j) lowpasses.push_back(gaussian_spectrum(side, bank.lowpass_sigma(j)));

  const auto energy = symmetric_energy(wavelets, side);
  const auto& phi = lowpasses.back();
  if (params.normalization == FrameNormalization::kTight) {
    for (std::size_t i = 0; i < energy.size(); ++i) {
      const double room = std::max(0.0, 1.0 - std::norm(phi[i]));
      const double f = energy[i] > std::numeric_limits<double>::min() ? std::sqrt(room / energy[i]) : 0.0;
      for (auto& w : wavelets) w[i] *= f;
    }
  } else {
    double c2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < energy.size(); ++i) {
      if (energy[i] > 0.0) c2 = std::min(c2, std::max(0.0, 1.0 - std::norm(phi[i])) / energy[i]);
    }
    const double c = std::isfinite(c2) ? std::sqrt(c2) : 1.0;
    for (auto& w : wavelets) {
      for (auto& v : w) v *= c;
    }
  }
  for (auto& w : wavelets) w[0] = 0.0;
  // Re-derive the rotated half so rounding in the normalization cannot break
  // the exact quarter-turn relation.
  if (L % 2 == 0) {
    for (int j = 1; j <= max_scale; ++j) {
      for (int ell = L / 2; ell < L; ++ell) {
        wavelets[bank.wavelet_slot(j, ell)] = rotate_quarter(wavelets[bank.wavelet_slot(j, ell - L / 2)], side);
      }
    }
  }

  bank.wavelets_.resize(wavelets.size());
  for (std::size_t s = 0; s < wavelets.size(); ++s) bank.wavelets_[s].push_back(std::move(wavelets[s]));
  bank.lowpasses_.resize(lowpasses.size());
  for (std::size_t j = 0; j < lowpasses.size(); ++j) bank.lowpasses_[j].push_back(std::move(lowpasses[j]));
  bank.build_levels();
  return bank;
}

SpatialFilterBank SpatialFilterBank::from_spectra(int log2_side, int max_scale, int orientations,
                                                  const MorletParams& params,
                                                  std::vector<std::vector<Complex>> wavelets,
                                                  std::vector<std::vector<Complex>> lowpasses) {
  SpatialFilterBank bank;
  bank.log2_side_ = log2_side;
  bank.max_scale_ = max_scale;
  bank.orientations_ = orientations;
  bank.params_ = params;
  const auto n = static_cast<std::size_t>(bank.side()) * bank.side();
  if (wavelets.size() != static_cast<std::size_t>(max_scale) * orientations ||
      lowpasses.size() != static_cast<std::size_t>(max_scale)) {
    throw FormatError("filter bank: wrong filter count");
  }
  bank.wavelets_.resize(wavelets.size());
  for (std::size_t s = 0; s < wavelets.size(); ++s) {
    if (wavelets[s].size() != n) throw FormatError("filter bank: wrong filter size");
    bank.wavelets_[s].push_back(std::move(wavelets[s]));
  }
  bank.lowpasses_.resize(lowpasses.size());
  for (std::size_t j = 0; j < lowpasses.size(); ++j) {
    if (lowpasses[j].size() != n) throw FormatError("filter bank: wrong filter size");
    bank.lowpasses_[j].push_back(std::move(lowpasses[j]));
  }
  bank.build_levels();
  return bank;
}

void SpatialFilterBank::build_levels() {
  const int side = this->side();
  for (int j = 1; j <= max_scale_; ++j) {
    for (int ell = 0; ell < orientations_; ++ell) {
      auto& levels = wavelets_[wavelet_slot(j, ell)];
      levels.resize(1);
      for (int level = 1; level < j; ++level) {
        auto p = fft::periodize_filter(levels[0], side, 1 << level);
        p[0] = 0.0;
        levels.push_back(std::move(p));
      }
    }
    auto& lows = lowpasses_[j - 1];
    lows.resize(1);
    for (int level = 1; level <= max_scale_ && level <= log2_side_; ++level) {
      lows.push_back(fft::periodize_filter(lows[0], side, 1 << level));
    }
  }
}

std::span<const Complex> SpatialFilterBank::wavelet(int j, int ell, int level) const {
  const auto& levels = wavelets_[wavelet_slot(j, ell)];
  if (level < 0 || level >= static_cast<int>(levels.size())) throw std::out_of_range("wavelet level");
  return levels[level];
}

std::span<const Complex> SpatialFilterBank::lowpass(int j, int level) const {
  if (j < 1 || j > max_scale_) throw std::out_of_range("lowpass index");
  const auto& levels = lowpasses_[j - 1];
  if (level < 0 || level >= static_cast<int>(levels.size())) throw std::out_of_range("lowpass level");
  return levels[level];
}

void SpatialFilterBank::inject_fault(int j, int ell, double factor) {
  for (auto& level : wavelets_[wavelet_slot(j, ell)]) {
    for (auto& v : level) v *= factor;
  }
}

std::vector<double> littlewood_paley_sum(const SpatialFilterBank& bank) {
  const int side = bank.side();
  std::vector<std::vector<Complex>> spectra;
  for (int j = 1; j <= bank.max_scale(); ++j) {
    for (int ell = 0; ell < bank.orientations(); ++ell) {
      auto w = bank.wavelet(j, ell);
      spectra.emplace_back(w.begin(), w.end());
    }
  }
  auto sum = symmetric_energy(spectra, side);
  const auto phi = bank.lowpass(bank.max_scale());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += std::norm(phi[i]);
  return sum;
}

LittlewoodPaleyReport validate_bank(const SpatialFilterBank& bank, double eta, double tolerance) {
  const auto sum = littlewood_paley_sum(bank);
  const int side = bank.side();
  LittlewoodPaleyReport report;
  report.eta = eta;
  report.tolerance = tolerance;
  report.min = *std::min_element(sum.begin(), sum.end());
  report.max = *std::max_element(sum.begin(), sum.end());
  double total = 0.0;
  for (double v : sum) total += v;
  report.mean = total / static_cast<double>(sum.size());
  report.high_band_min = std::numeric_limits<double>::infinity();
  for (int k0 = 0; k0 < side; ++k0) {
    for (int k1 = 0; k1 < side; ++k1) {
      const int f0 = std::min(k0, side - k0);
      const int f1 = std::min(k1, side - k1);
      // |w|_inf >= pi/2  <=>  wrapped index >= side/4
      if (4 * std::max(f0, f1) >= side) report.high_band_min = std::min(report.high_band_min, sum[at(side, k0, k1)]);
    }
  }
  report.upper_ok = report.max <= 1.0 + tolerance;
  report.lower_ok = report.min >= 1.0 - eta;
  return report;
}

// ---------------------------------------------------------------------------
// Angular bank

namespace {

std::vector<Complex> periodized_gabor_1d(int length, double sigma, double xi) {
  const int copies = std::max(1, static_cast<int>(std::ceil(6.0 * sigma / length)));
  std::vector<Complex> out(length);
  for (int n = 0; n < length; ++n) {
    for (int a = -copies; a <= copies; ++a) {
      const double x = n + static_cast<double>(a) * length;
      out[n] += std::exp(Complex(-x * x / (2.0 * sigma * sigma), xi * x));
    }
  }
  return out;
}

std::vector<Complex> dft(std::span<const Complex> x, int sign) {
  const auto n = static_cast<int>(x.size());
  std::vector<Complex> out(n);
  for (int k = 0; k < n; ++k) {
    Complex acc = 0.0;
    for (int m = 0; m < n; ++m) {
      const auto e = static_cast<long long>(k) * m % n;
      acc += x[m] * std::polar(1.0, sign * 2.0 * pi * static_cast<double>(e) / n);
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

AngularFilterBank AngularFilterBank::build(int orientations, int max_scale, const MorletParams& params) {
  if (!is_power_of_two(orientations) || orientations < 4) {
    throw std::invalid_argument("invalid-K: angular bank needs L a power of two >= 4");
  }
  const int log2_l = log2_exact(orientations);
  if (max_scale < 1 || max_scale >= log2_l) throw std::invalid_argument("invalid-K: need 1 <= K < log2 L");

  std::vector<std::vector<Complex>> spectra;
  for (int k = 1; k <= max_scale; ++k) {
    const double sigma = params.sigma0 * std::ldexp(1.0, k - 1);
    const double xi = params.xi0 * std::ldexp(1.0, -(k - 1));
    auto g = dft(periodized_gabor_1d(orientations, sigma, xi), -1);
    auto e = dft(periodized_gabor_1d(orientations, sigma, 0.0), -1);
    const Complex ratio = g[0] / e[0];
    for (int n = 0; n < orientations; ++n) g[n] -= ratio * e[n];
    g[0] = 0.0;
    spectra.push_back(std::move(g));
  }

  auto low = periodized_gabor_1d(orientations, params.sigma0 * std::ldexp(1.0, max_scale), 0.0);
  double total = 0.0;
  for (const auto& v : low) total += v.real();
  for (auto& v : low) v = v.real() / total;
  auto low_spec = dft(low, -1);
  low_spec[0] = 1.0;
  for (auto& v : low_spec) v = v.real();

  // One-sided sum kept <= 1 with equality at its peak.
  double c2 = std::numeric_limits<double>::infinity();
  for (int n = 1; n < orientations; ++n) {
    double e = 0.0;
    for (const auto& s : spectra) e += std::norm(s[n]);
    if (e > 0.0) c2 = std::min(c2, std::max(0.0, 1.0 - std::norm(low_spec[n])) / e);
  }
  const double c = std::sqrt(c2);
  for (auto& s : spectra) {
    for (auto& v : s) v *= c;
  }
  return from_spectra(orientations, max_scale, std::move(spectra), std::move(low_spec));
}

AngularFilterBank AngularFilterBank::from_spectra(int orientations, int max_scale,
                                                  std::vector<std::vector<Complex>> spectra,
                                                  std::vector<Complex> lowpass_spectrum) {
  if (spectra.size() != static_cast<std::size_t>(max_scale) ||
      lowpass_spectrum.size() != static_cast<std::size_t>(orientations)) {
    throw FormatError("angular bank: wrong filter count");
  }
  AngularFilterBank bank;
  bank.orientations_ = orientations;
  bank.max_scale_ = max_scale;
  bank.spectra_ = std::move(spectra);
  bank.lowpass_spectrum_ = std::move(lowpass_spectrum);
  bank.build_taps();
  return bank;
}

void AngularFilterBank::build_taps() {
  const double inv = 1.0 / orientations_;
  taps_.clear();
  for (const auto& s : spectra_) {
    if (s.size() != static_cast<std::size_t>(orientations_)) throw FormatError("angular bank: wrong filter size");
    auto t = dft(s, +1);
    for (auto& v : t) v *= inv;
    // Exact zero mean: sum of taps equals the (zero) DC bin.
    Complex mean = 0.0;
    for (const auto& v : t) mean += v;
    mean *= inv;
    for (auto& v : t) v -= mean;
    taps_.push_back(std::move(t));
  }
  lowpass_taps_ = dft(lowpass_spectrum_, +1);
  for (auto& v : lowpass_taps_) v = v.real() * inv;
}

std::vector<double> angular_frame_sum(const AngularFilterBank& bank) {
  std::vector<double> sum(bank.orientations(), 0.0);
  for (int n = 0; n < bank.orientations(); ++n) {
    for (int k = 1; k <= bank.max_scale(); ++k) sum[n] += std::norm(bank.wavelet_spectrum(k)[n]);
    sum[n] += std::norm(bank.lowpass_spectrum()[n]);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Cache

namespace {
constexpr std::array<char, 4> kFilterMagic{'R', 'S', 'F', 'B'};
}

void save_filter_cache(const std::filesystem::path& path, const SpatialFilterBank& spatial,
                       const AngularFilterBank& angular) {
  if (angular.orientations() != spatial.orientations()) {
    throw std::invalid_argument("filter cache: spatial and angular banks disagree on L");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  LittleEndianWriter w(out);
  w.magic(kFilterMagic);
  w.u32(kFilterCacheVersion);
  w.i32(spatial.log2_side());
  w.i32(spatial.max_scale());
  w.i32(spatial.orientations());
  w.i32(angular.max_scale());
  const auto& p = spatial.params();
  w.f64(p.sigma0);
  w.f64(p.xi0);
  w.f64(p.slant);
  w.u8(p.normalization == FrameNormalization::kTight ? 0 : 1);
  for (int j = 1; j <= spatial.max_scale(); ++j) {
    for (int ell = 0; ell < spatial.orientations(); ++ell) w.complexes(spatial.wavelet(j, ell));
  }
  for (int j = 1; j <= spatial.max_scale(); ++j) w.complexes(spatial.lowpass(j));
  for (int k = 1; k <= angular.max_scale(); ++k) w.complexes(angular.wavelet_spectrum(k));
  w.complexes(angular.lowpass_spectrum());
}

std::optional<FilterBanks> load_filter_cache(const std::filesystem::path& path, int log2_side,
                                             int max_scale, int orientations, int angular_scales,
                                             const MorletParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  LittleEndianReader r(in);
  r.expect_magic(kFilterMagic);
  if (r.u32() != kFilterCacheVersion) return std::nullopt;
  const int d = r.i32();
  const int J = r.i32();
  const int L = r.i32();
  const int K = r.i32();
  MorletParams stored;
  stored.sigma0 = r.f64();
  stored.xi0 = r.f64();
  stored.slant = r.f64();
  stored.normalization = r.u8() == 0 ? FrameNormalization::kTight : FrameNormalization::kPeak;
  if (d != log2_side || J != max_scale || L != orientations || K != angular_scales || !(stored == params)) {
    return std::nullopt;
  }
  const auto n = static_cast<std::size_t>(1) << (2 * d);
  std::vector<std::vector<Complex>> wavelets;
  for (int i = 0; i < J * L; ++i) wavelets.push_back(r.complexes(n));
  std::vector<std::vector<Complex>> lows;
  for (int j = 0; j < J; ++j) lows.push_back(r.complexes(n));
  std::vector<std::vector<Complex>> ang;
  for (int k = 0; k < K; ++k) ang.push_back(r.complexes(L));
  auto ang_low = r.complexes(L);
  return FilterBanks{SpatialFilterBank::from_spectra(d, J, L, stored, std::move(wavelets), std::move(lows)),
                     AngularFilterBank::from_spectra(L, K, std::move(ang), std::move(ang_low))};
}

}  // namespace rotoscat
