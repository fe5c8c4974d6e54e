// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rotoscat/fft.hpp"

namespace rotoscat {

/// How the wavelets are scaled against the low-pass phi_J.
///  kTight: per-frequency rescaling so the Littlewood-Paley sum is exactly 1.
///  kPeak:  one common factor so the maximum of the sum is 1 (plain Morlet shape).
enum class FrameNormalization { kTight, kPeak };

std::string to_string(FrameNormalization n);
FrameNormalization frame_normalization_from_string(const std::string& s);

/// Morlet constants. The wavelet of scale index j (1-based) uses
/// sigma = sigma0 * 2^(j-1) and center frequency xi0 * 2^-(j-1); the low-pass
/// phi_j uses sigma0 * 2^j.
struct MorletParams {
  double sigma0 = 0.8;
  double xi0 = 3.0 * std::numbers::pi / 4.0;
  double slant = 0.5;
  FrameNormalization normalization = FrameNormalization::kTight;

  bool operator==(const MorletParams&) const = default;
};

/// Fourier-domain spatial Morlet wavelets psi_{j,theta} (1 <= j <= J,
/// theta = ell*pi/L for 0 <= ell < L) and Gaussian low-passes phi_j.
///
/// Filters are sampled on the full 2^d grid. Reduced-resolution copies,
/// used on frames already subsampled by 2^level, are the periodized spectra
/// (spatial taps 4^level * h[2^level * n]) with the DC bin of band-pass
/// filters forced to zero.
///
/// Immutable after construction apart from the explicit fault-injection hook.
class SpatialFilterBank {
 public:
  static SpatialFilterBank build(int log2_side, int max_scale, int orientations,
                                 const MorletParams& params = {});

  int log2_side() const { return log2_side_; }
  int side() const { return 1 << log2_side_; }
  int max_scale() const { return max_scale_; }
  int orientations() const { return orientations_; }
  const MorletParams& params() const { return params_; }

  double angle(int ell) const { return ell * std::numbers::pi / orientations_; }
  double wavelet_sigma(int j) const;
  double wavelet_frequency(int j) const;
  double lowpass_sigma(int j) const;

  /// psi_{j, ell*pi/L} at resolution side / 2^level, 0 <= level < j.
  std::span<const Complex> wavelet(int j, int ell, int level = 0) const;
  /// phi_j at resolution side / 2^level, 0 <= level <= max_scale.
  std::span<const Complex> lowpass(int j, int level = 0) const;

  std::size_t band_count() const { return static_cast<std::size_t>(max_scale_) * orientations_; }

  /// Multiplies one wavelet (all resolutions) by `factor`. Used to produce a
  /// deliberately invalid bank for validation tests.
  void inject_fault(int j, int ell, double factor);

  /// Rebuilds from full-resolution spectra (filter-cache loading path).
  static SpatialFilterBank from_spectra(int log2_side, int max_scale, int orientations,
                                        const MorletParams& params,
                                        std::vector<std::vector<Complex>> wavelets,
                                        std::vector<std::vector<Complex>> lowpasses);

 private:
  void build_levels();
  std::size_t wavelet_slot(int j, int ell) const;

  int log2_side_ = 0;
  int max_scale_ = 0;
  int orientations_ = 0;
  MorletParams params_;
  // [slot][level] spectra; slot = (j-1)*L + ell.
  std::vector<std::vector<std::vector<Complex>>> wavelets_;
  // [j-1][level]
  std::vector<std::vector<std::vector<Complex>>> lowpasses_;
};

/// 1D circular Morlet bank along the L orientation samples (period pi).
/// Band k (1 <= k <= K) is sampled at rate 2^(k-1); the angular low-pass at
/// rate 2^(K-1). Summed over bands the retained angle samples total 2L.
class AngularFilterBank {
 public:
  static AngularFilterBank build(int orientations, int max_scale, const MorletParams& params = {});

  int orientations() const { return orientations_; }
  int max_scale() const { return max_scale_; }

  /// DFT of psibar_k, length L.
  std::span<const Complex> wavelet_spectrum(int k) const { return spectra_[k - 1]; }
  /// Circular taps a[m], m = 0..L-1, so that (u * a)[l] = sum_m a[(l - m) mod L] u[m].
  std::span<const Complex> wavelet_taps(int k) const { return taps_[k - 1]; }
  std::span<const Complex> lowpass_spectrum() const { return lowpass_spectrum_; }
  std::span<const Complex> lowpass_taps() const { return lowpass_taps_; }

  /// Angular subsampling rate for band k; k == 0 is the low-pass.
  int rate(int k) const { return 1 << ((k == 0 ? max_scale_ : k) - 1); }

  static AngularFilterBank from_spectra(int orientations, int max_scale,
                                        std::vector<std::vector<Complex>> spectra,
                                        std::vector<Complex> lowpass_spectrum);

 private:
  void build_taps();

  int orientations_ = 0;
  int max_scale_ = 0;
  std::vector<std::vector<Complex>> spectra_;
  std::vector<std::vector<Complex>> taps_;
  std::vector<Complex> lowpass_spectrum_;
  std::vector<Complex> lowpass_taps_;
};

/// |phi_J(w)|^2 + 1/2 sum_{j,theta} (|psi(w)|^2 + |psi(-w)|^2) at every full-resolution frequency.
std::vector<double> littlewood_paley_sum(const SpatialFilterBank& bank);

/// Frame slack for default parameters: the sum must stay within [1 - eta, 1].
inline constexpr double kFrameSlack = 0.2;
inline constexpr double kFrameUpperTolerance = 1e-6;

struct LittlewoodPaleyReport {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  /// Minimum over |w|_inf >= pi/2.
  double high_band_min = 0.0;
  double eta = kFrameSlack;
  double tolerance = kFrameUpperTolerance;
  bool upper_ok = false;
  bool lower_ok = false;
  bool passed() const { return upper_ok && lower_ok; }
};

LittlewoodPaleyReport validate_bank(const SpatialFilterBank& bank, double eta = kFrameSlack,
                                    double tolerance = kFrameUpperTolerance);

/// One-sided angular sum sum_k |psibar_k(nu)|^2 + |phibar(nu)|^2, length L.
std::vector<double> angular_frame_sum(const AngularFilterBank& bank);

// Filter cache. Little-endian container; returns nullopt when the stored key
// (d, J, L, K, Morlet params, format version) differs from the requested one.
inline constexpr std::uint32_t kFilterCacheVersion = 1;

void save_filter_cache(const std::filesystem::path& path, const SpatialFilterBank& spatial,
                       const AngularFilterBank& angular);

struct FilterBanks {
  SpatialFilterBank spatial;
  AngularFilterBank angular;
};

std::optional<FilterBanks> load_filter_cache(const std::filesystem::path& path, int log2_side,
                                             int max_scale, int orientations, int angular_scales,
                                             const MorletParams& params);

}  // namespace rotoscat
