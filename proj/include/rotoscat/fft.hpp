// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The rotoscat Authors

#pragma once

#include <complex>
#include <span>
#include <vector>

namespace rotoscat {

using Complex = std::complex<double>;

namespace fft {

/// Unnormalized forward 2D DFT of a row-major side x side complex array.
void forward2d(std::span<const Complex> in, std::span<Complex> out, int side);

/// Inverse 2D DFT including the 1/side^2 factor, so inverse2d(forward2d(x)) == x.
void inverse2d(std::span<const Complex> in, std::span<Complex> out, int side);

std::vector<Complex> forward2d(std::span<const double> real_in, int side);

/// Spectrum of the signal subsampled by `factor` in both axes:
/// out[k] = factor^-2 * sum of the aliases of in[k].
std::vector<Complex> subsample_spectrum(std::span<const Complex> spectrum, int side, int factor);

/// Sum of aliases without the 1/factor^2 weight. Gives the reduced-resolution
/// copy of a filter whose spatial taps are factor^2 * h[factor * n].
std::vector<Complex> periodize_filter(std::span<const Complex> filter, int side, int factor);

}  // namespace fft
}  // namespace rotoscat
